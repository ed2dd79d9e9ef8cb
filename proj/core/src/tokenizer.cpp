#include "strife/tokenizer.hpp"

#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife::models {
namespace {

bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

constexpr std::uint64_t kUnigramSalt = 0x243f6a8885a308d3ULL;
constexpr std::uint64_t kBigramSalt = 0x13198a2e03707344ULL;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Tokenizer::Tokenizer(std::size_t max_sequence_length, std::uint32_t buckets)
    : max_len_(max_sequence_length), buckets_(buckets) {
  if (max_len_ == 0) fail(ErrorKind::kConfiguration, "max_sequence_length must be positive");
  if (buckets_ < 2) fail(ErrorKind::kConfiguration, "feature bucket count must be at least 2");
}

Encoded Tokenizer::encode(std::string_view text) const {
  auto tokens = tokenize(text);
  Encoded out;
  if (tokens.size() > max_len_) {
    tokens.resize(max_len_);
    out.truncated = true;
  }
  out.tokens = tokens.size();
  out.features.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.features.push_back(static_cast<std::uint32_t>(text::fnv1a64(tokens[i], kUnigramSalt) % buckets_));
    if (i + 1 < tokens.size()) {
      const auto h = text::fnv1a64(tokens[i + 1], text::fnv1a64(tokens[i], kBigramSalt) ^ 0x20);
      out.features.push_back(static_cast<std::uint32_t>(h % buckets_));
    }
  }
  return out;
}

}  // namespace strife::models
