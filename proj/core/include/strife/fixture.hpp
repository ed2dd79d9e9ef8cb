#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "strife/types.hpp"

// Deterministic synthetic corpus with the shape of the Plutarch/ERIS data:
// 13 works, 2564 sections of which 461 are violent, and 2780 curated events.
namespace strife::fixture {

struct WorkSpec {
  std::string_view work_id;
  std::size_t sections = 0;
  std::size_t violent = 0;
};

std::span<const WorkSpec> plutarch_works();

inline constexpr std::size_t kPlutarchEvents = 470;     // on 461 distinct sections
inline constexpr std::size_t kAbsentSectionEvents = 2;  // Plutarch refs past the end of a work
inline constexpr std::size_t kOtherAuthorEvents = 2308;

inline constexpr std::string_view kCleitusText =
    "And so, at last, Alexander seized a spear from one of his guards, met Cleitus as he was drawing aside the "
    "curtain before the door, and ran him through.";
inline constexpr std::string_view kTisaphernesText =
    "As a result of this battle, the Greeks could not only harry the country of the King without fear, but had the "
    "satisfaction of seeing due punishment inflicted upon Tisaphernes, an abominable man, and most hateful to the "
    "Greek race.";

struct Options {
  std::uint64_t seed = 2024;
  /// Share of events whose text carries a cue for their level.
  double level_cue = 0.85;
  /// Same for context, motive and consequence.
  double label_cue = 0.70;
  /// Non-violent sections mentioning armies or war without violence.
  double distractor_rate = 0.15;
  /// Non-violent sections that do describe violence nobody annotated.
  double hidden_violence = 0.03;
  /// Violent events told in mild words ("did away with").
  double mild_violence = 0.08;
};

struct Fixture {
  /// Ordered by ref.
  std::vector<Passage> passages;
  std::vector<CuratedEvent> events;
};

Fixture generate(const Options& options = {});

/// Writes <dir>/corpus/<work>.txt (section headers "@@ <work> <ch>.<sec>")
/// and <dir>/events.jsonl.
void write(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace strife::fixture
