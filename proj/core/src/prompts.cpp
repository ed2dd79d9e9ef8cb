#include "strife/prompts.hpp"

#include "strife/text.hpp"

namespace strife::prompts {
namespace {

constexpr std::string_view kZeroShotText =
    "You are a historian that classifies historical texts into violent or non-violent based on the "
    "provided examples. The following principles apply to the classification of violent acts:\n"
    "- Arrests of people and banishments are initially recorded as acts of violence and discussed with "
    "the team before being activated.\n"
    "- Fictional narratives, such as the conquest of Troy, are included.\n"
    "- Establishment of colonies, verbal violence (insults), and damage to property (including fires in "
    "buildings, etc.) are excluded.\n"
    "\n"
    "Your task is to classify each passage based on the criteria above. Respond with only [VIOLENT] or "
    "[NON-VIOLENT] for each classification.";

constexpr std::string_view kParaphraseText =
    "You are a historian that wants to paraphrase sentences to create new ones for enhancing your "
    "dataset. Generate three different ways to rewrite the following sentence while keeping the same "
    "meaning. Important to note that you are not allowed to change context, motive or consequences.";

}  // namespace

std::string PromptTemplate::checksum() const {
  return text::sha256_hex(std::string(name) + "\n" + std::string(version) + "\n" + std::string(text));
}

const PromptTemplate& zero_shot() {
  static const PromptTemplate kPrompt{"zero-shot-annotator", "1", kZeroShotText};
  return kPrompt;
}

const PromptTemplate& paraphrase() {
  static const PromptTemplate kPrompt{"paraphrase-augmentation", "1", kParaphraseText};
  return kPrompt;
}

}  // namespace strife::prompts
