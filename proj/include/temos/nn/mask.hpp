#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "temos/errors.hpp"

namespace temos::nn {

// [batch x length] validity flags; 1 marks a real frame or token.
struct AttentionMask {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::uint8_t> valid;

  static AttentionMask all_valid(std::size_t batch, std::size_t length) {
    return {batch, length, std::vector<std::uint8_t>(batch * length, 1)};
  }

  static AttentionMask from_lengths(std::span<const std::size_t> lengths, std::size_t max_len) {
    AttentionMask m{lengths.size(), max_len, std::vector<std::uint8_t>(lengths.size() * max_len, 0)};
    for (std::size_t b = 0; b < lengths.size(); ++b) {
      if (lengths[b] > max_len) throw InvalidArgument("mask: length exceeds padded size");
      for (std::size_t i = 0; i < lengths[b]; ++i) m.valid[b * max_len + i] = 1;
    }
    return m;
  }

  bool at(std::size_t b, std::size_t i) const { return valid[b * length + i] != 0; }

  std::size_t count(std::size_t b) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < length; ++i) n += valid[b * length + i] ? 1 : 0;
    return n;
  }

  // Throws when the flag count is wrong or a row has no valid entry.
  void validate() const {
    if (valid.size() != batch * length) throw InvalidArgument("mask: flag count does not match batch x length");
    for (std::size_t b = 0; b < batch; ++b) {
      if (count(b) == 0) throw InvalidArgument("mask: row " + std::to_string(b) + " has no valid position");
    }
  }

  // Prepends `n` always-valid positions to every row.
  AttentionMask with_prefix(std::size_t n) const {
    AttentionMask m{batch, length + n, std::vector<std::uint8_t>(batch * (length + n), 1)};
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < length; ++i) m.valid[b * (length + n) + n + i] = valid[b * length + i];
    return m;
  }
};

}  // namespace temos::nn
