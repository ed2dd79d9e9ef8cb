#pragma once

#include <string>
#include <string_view>

namespace strife::prompts {

/// A versioned system prompt. The checksum goes into every cached response so
/// edits to a prompt never reuse answers produced by an older wording.
struct PromptTemplate {
  std::string_view name;
  std::string_view version;
  std::string_view text;

  std::string checksum() const;
};

/// Zero-shot violence annotation prompt.
const PromptTemplate& zero_shot();

/// Label-preserving paraphrase prompt used for augmentation.
const PromptTemplate& paraphrase();

}  // namespace strife::prompts
