#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace temos::data {

struct TextSample {
  std::string raw;
  std::vector<std::size_t> tokens;
};

// Lowercases, turns every non-alphanumeric character into a separator and
// splits on whitespace. "A man walks." -> {"a", "man", "walks"}.
std::vector<std::string> normalize_words(std::string_view text);

// Word-level vocabulary. Ids 0 and 1 are reserved; the rest are assigned in
// lexicographic order of the words seen at build time.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocabulary();
  static Vocabulary build(const std::vector<std::string>& corpus);
  static Vocabulary from_words(const std::vector<std::string>& words);  // ids 2.. in given order

  std::size_t size() const { return words_.size(); }
  std::size_t id(std::string_view word) const;  // kUnk when absent
  bool contains(std::string_view word) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }
  // Non-reserved words in id order.
  std::vector<std::string> words() const { return {words_.begin() + 2, words_.end()}; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> ids_;
};

// Throws InvalidArgument when nothing is left after normalization.
TextSample tokenize(std::string_view text, const Vocabulary& vocab);

}  // namespace temos::data
