#include "temos/data/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "temos/errors.hpp"

namespace temos::data {

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

Vocabulary::Vocabulary() : words_{"<pad>", "<unk>"} {}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (v.ids_.contains(w)) throw InvalidArgument("vocabulary: duplicate word '" + w + "'");
    v.ids_.emplace(w, v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus) {
  std::set<std::string> unique;
  for (const auto& text : corpus)
    for (auto& w : normalize_words(text)) unique.insert(std::move(w));
  return from_words({unique.begin(), unique.end()});
}

std::size_t Vocabulary::id(std::string_view word) const {
  const auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return ids_.find(word) != ids_.end(); }

TextSample tokenize(std::string_view text, const Vocabulary& vocab) {
  const auto words = normalize_words(text);
  if (words.empty()) throw InvalidArgument("tokenize: text is empty after normalization");
  TextSample s{std::string(text), {}};
  s.tokens.reserve(words.size());
  for (const auto& w : words) s.tokens.push_back(vocab.id(w));
  return s;
}

}  // namespace temos::data
