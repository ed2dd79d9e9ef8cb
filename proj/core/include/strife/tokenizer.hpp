#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace strife::models {

/// Lowercased word tokens. Letters, digits and any non-ASCII byte form words;
/// everything else separates them.
std::vector<std::string> tokenize(std::string_view text);

struct Encoded {
  /// Hashed unigram and adjacent-bigram feature ids in [0, buckets).
  std::vector<std::uint32_t> features;
  std::size_t tokens = 0;
  bool truncated = false;
};

class Tokenizer {
 public:
  Tokenizer(std::size_t max_sequence_length, std::uint32_t buckets);

  /// Keeps the first max_sequence_length tokens.
  Encoded encode(std::string_view text) const;

  std::size_t max_sequence_length() const noexcept { return max_len_; }
  std::uint32_t buckets() const noexcept { return buckets_; }

 private:
  std::size_t max_len_;
  std::uint32_t buckets_;
};

}  // namespace strife::models
