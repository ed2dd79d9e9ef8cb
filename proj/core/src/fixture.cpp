#include "strife/fixture.hpp"

#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>

#include "strife/errors.hpp"
#include "strife/jsonl.hpp"
#include "strife/registry.hpp"
#include "strife/text.hpp"

namespace strife::fixture {
namespace {

__extension__ using u128 = unsigned __int128;

constexpr WorkSpec kWorks[] = {
    {"Alexander", 308, 70},    {"Agesilaus", 160, 30},  {"Caesar", 276, 55},      {"Pompey", 300, 52},
    {"Pericles", 156, 20},     {"Themistocles", 128, 22}, {"Alcibiades", 156, 25}, {"Lysander", 120, 24},
    {"Sulla", 190, 40},        {"Marius", 184, 38},     {"Cato_Minor", 212, 30},  {"Demosthenes", 124, 15},
    {"Antony", 250, 40},
};

constexpr std::string_view kOtherWorks[] = {"Thucydides", "Tacitus_Annals", "Xenophon_Hellenica", "Herodian"};

// Test-split supports per label (registry order), scaled by five below.
constexpr std::size_t kLevelSupport[] = {96, 17, 371, 72};
constexpr std::size_t kContextSupport[] = {29, 30, 181, 69, 17, 15, 11, 21, 7, 2, 6, 4, 1,
                                           4,  31, 5,   11, 93, 7,  8,  2,  1, 1, 0, 0};
constexpr std::size_t kMotiveSupport[] = {20, 122, 197, 28, 77, 13, 43, 35, 5, 6, 6, 4, 0};
constexpr std::size_t kConsequenceSupport[] = {199, 28, 24, 12, 6, 54, 32, 16, 6, 3, 5, 15, 2, 10, 2, 13, 1, 2, 14,
                                               26,  2,  9,  2,  6, 1, 30, 4,  3,  2, 3, 2, 6,  1, 6,  4, 3,  2, 0};

constexpr std::string_view kPersons[] = {
    "Archias",   "Cleon",     "Demaratus", "Eudamus",  "Hipparchus", "Lycon",     "Menander",  "Nicias",
    "Pausanias", "Philotas",  "Polemon",   "Sosias",   "Theron",     "Xenares",   "Callias",   "Dion",
    "Aristo",    "Critias",   "Gaius",     "Lucius",   "Marcus",     "Publius",   "Quintus",   "Titus",
    "Servius",   "Decimus",   "Aulus",     "Gnaeus",   "Sextus",     "Spurius",   "Mamercus",  "Oppius",
};
constexpr std::string_view kPeoples[] = {
    "Persians", "Thebans",   "Spartans",  "Athenians", "Carthaginians", "Gauls",      "Parthians",
    "Samnites", "Illyrians", "Thracians", "Scythians", "Corinthians",   "Macedonians", "Numidians",
};
constexpr std::string_view kPlaces[] = {
    "Athens",  "Sparta",  "Thebes",   "Corinth", "Syracuse", "Babylon", "Tyre",    "Capua",
    "Argos",   "Megara",  "Ephesus",  "Miletus", "Rhodes",   "Delphi",  "Tarentum", "Massilia",
};
constexpr std::string_view kWeapons[] = {"spear", "sword", "dagger", "javelin", "club"};

constexpr std::string_view kNeutral[] = {
    "{P} spent the winter at {L}, where he studied philosophy with {Q}.",
    "{P} was fond of horses and kept a large stable near {L}.",
    "The people of {L} honoured {P} with a bronze statue in the market-place.",
    "{P} married the daughter of {Q}, a woman of great beauty and good sense.",
    "In his youth {P} was devoted to letters and to music.",
    "He sent envoys to {L} to arrange the purchase of grain.",
    "{P} delivered a long speech in the assembly about the new harbour.",
    "The festival was celebrated at {L} with great splendour that year.",
    "{P} received costly gifts from the king of the {N}.",
    "He restored the temples of {L} and adorned them with offerings.",
    "{P} was a man of few words, but his friends valued his advice.",
    "They say that {P} rose early and read before breakfast.",
    "{Q} wrote a history of these years which is still read.",
    "{P} built a library at {L} and filled it with books.",
    "The harvest at {L} was plentiful, and prices fell.",
    "He travelled to {L} and consulted the oracle about his marriage.",
    "{P} paid the debts of his friends out of his own purse.",
    "The citizens of {L} elected {P} to the magistracy for a second year.",
    "{P} laughed at the flattery of the courtiers and dismissed them.",
    "His mother, they say, dreamed of a great light before he was born.",
    "{P} and {Q} corresponded for many years about questions of law.",
    "He gave magnificent games and shows for the people of {L}.",
    "{P} was praised for his moderation at table and in dress.",
    "The ambassadors of the {N} were received with courtesy at {L}.",
    "{P} retired to his estate near {L} and planted vines.",
    "He reformed the calendar and arranged the public accounts.",
    "{Q} was appointed to manage the building of the new walls at {L}.",
    "{P} sailed to {L} to attend the games and won a crown for his chariot.",
    "Many believed that {P} owed his success to fortune rather than skill.",
    "{P} spoke with admiration of the customs of the {N}.",
};
constexpr std::string_view kDistractors[] = {
    "{P} reviewed the army on the plain near {L} and praised the discipline of the soldiers.",
    "The fleet lay at anchor off {L} all winter without an engagement.",
    "{P} talked at length of the wars of his father, though he took no part in them.",
    "The soldiers were paid their wages and sent home to their farms.",
    "A truce was agreed and the armies of the {N} withdrew without a battle.",
    "{P} wrote a treatise on generalship which the officers read with care.",
    "The veterans were settled on land near {L} and given seed for the spring.",
    "{P} drilled the recruits every morning and taught them to march in order.",
};

constexpr std::string_view kInterpersonal[] = {
    "{P} attacked {Q} with a {W} and killed him",
    "{P} struck {Q} down with his own hand",
    "{P} seized {Q} by the throat and strangled him",
    "{P} stabbed {Q} with a {W} and left him dying",
    "{P} ran {Q} through with a {W}",
};
constexpr std::string_view kIntrapersonal[] = {
    "{P} took his own life",
    "{P} fell upon his own sword and died",
    "{P} drank poison and died by his own hand",
    "{P} starved himself to death",
};
constexpr std::string_view kIntersocial[] = {
    "the army of the {N} fought against the {M} and slew many of them",
    "the {N} marched against the {M} and cut down their soldiers",
    "the {N} and the {M} met in arms and many fell on both sides",
    "the forces of {L} attacked the {N} and slaughtered them",
    "the {N} stormed the camp of the {M} and killed the defenders",
};
constexpr std::string_view kIntrasocial[] = {
    "the citizens of {L} rose against their magistrates and killed several of them",
    "the common people of {L} fell upon the nobles and murdered them",
    "a faction of the citizens of {L} massacred their fellow citizens",
    "the partisans of {P} slaughtered their political rivals in {L}",
};
constexpr std::string_view kLevelFree[] = {
    "blood was shed and several men were slain",
    "violence broke out and many were wounded",
    "men were killed in the struggle",
};
constexpr std::string_view kMild[] = {
    "{P} did away with {Q}",
    "{P} dealt with {Q} in the harsh manner of the time",
    "the {N} overcame the {M} and few of them returned home",
    "{Q} was removed from the scene by {P}",
};

const std::map<std::string_view, std::string_view> kContextCue = {
    {"civilian", "in the streets of {L} among the unarmed townsfolk"},
    {"jurisdictional", "after a trial before the judges"},
    {"war/military campaign", "in the course of the long campaign"},
    {"battle", "in a pitched battle on the plain"},
    {"plunder", "while plundering the countryside"},
    {"ambush", "from an ambush laid in the woods"},
    {"conspiracy", "as part of a secret conspiracy"},
    {"revolt", "during the revolt of the subjects"},
    {"conquest", "when the territory was conquered"},
    {"naval battle", "in a sea fight off the coast"},
    {"religious", "at the altar during a sacrifice"},
    {"institutional", "in the senate house"},
    {"sack", "as the city was sacked"},
    {"single combat", "in single combat before both armies"},
    {"siege", "while the walls were under siege"},
    {"regicide", "in order to murder the king"},
    {"military", "among the soldiers in the camp"},
    {"entertaining", "at a banquet while drinking"},
    {"mutiny", "when the troops mutinied"},
    {"familicide", "within his own family"},
    {"fratricide", "against his own brother"},
    {"paramilitary", "with a band of armed retainers"},
    {"execution", "at the place of public execution"},
    {"riot", "in a riot in the forum"},
};
const std::map<std::string_view, std::string_view> kMotiveCue = {
    {"political", "to secure political power"},
    {"tactical/strategical", "for tactical advantage"},
    {"economical", "for the sake of money and spoil"},
    {"following orders", "following the orders of the general"},
    {"self-defence", "in defence of his own life"},
    {"emotional", "in a fit of rage"},
    {"ambition", "out of ambition for glory"},
    {"social", "to keep his standing among the citizens"},
    {"religious", "to appease the gods"},
    {"other", "for reasons of his own"},
    {"none/accident", "by accident"},
    {"revenge", "to avenge an earlier wrong"},
};
const std::map<std::string_view, std::string_view> kConsequenceCue = {
    {"campaign", "the campaign continued"},
    {"conquest", "the land was conquered"},
    {"coronation/inauguration", "a new king was crowned"},
    {"exile", "the survivors were driven into exile"},
    {"death", "he died of his wounds"},
    {"other", "matters took an unexpected turn"},
    {"victory", "they won a great victory"},
    {"bestowing of honors", "honours were bestowed on the victors"},
    {"issuing of law/decrees", "a new decree was issued"},
    {"injury", "many were badly injured"},
    {"battle", "a battle followed"},
    {"declaration of war", "war was declared"},
    {"retreat", "the enemy retreated"},
    {"mutiny", "the soldiers mutinied"},
    {"sending of envoys", "envoys were sent to sue for terms"},
    {"civil conflict/civil war", "civil war broke out"},
    {"tyranny", "a tyranny was established"},
    {"capture", "many were taken captive"},
    {"destruction/devastation", "the city was utterly destroyed"},
    {"repopulation", "the city was repopulated with new settlers"},
    {"declaration of peace/truce", "a truce was declared"},
    {"release of prisoners", "the prisoners were released"},
    {"garrisoning of troops", "a garrison was placed in the citadel"},
    {"famine", "famine followed"},
    {"siege", "the city was besieged"},
    {"deportation", "the inhabitants were deported"},
    {"treaty/agreement/pact", "a treaty was sworn"},
    {"surrender", "the enemy surrendered"},
    {"financial reward", "the soldiers received a bounty in silver"},
    {"seclusion", "he withdrew into seclusion"},
    {"plunder", "the country was plundered"},
    {"mutilation", "the body was mutilated"},
    {"revenge", "his kinsmen swore revenge"},
    {"execution", "the culprits were executed"},
    {"torture", "the captives were tortured"},
    {"applause", "the people applauded"},
    {"enslavement", "the survivors were sold into slavery"},
};
constexpr std::string_view kConsequenceLead[] = {"As a result, ", "In consequence, ", "Afterwards ", "Soon "};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>((static_cast<u128>(gen_()) * n) >> 64);
  }
  bool chance(double p) { return static_cast<double>(gen_() >> 11) * 0x1.0p-53 < p; }
  template <typename T, std::size_t N>
  const T& pick(const T (&items)[N]) {
    return items[below(N)];
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

std::string upper_first(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string fill(std::string_view pattern, Rng& rng) {
  const std::string p(rng.pick(kPersons));
  std::string q(rng.pick(kPersons));
  while (q == p) q = std::string(rng.pick(kPersons));
  const std::string n(rng.pick(kPeoples));
  std::string m(rng.pick(kPeoples));
  while (m == n) m = std::string(rng.pick(kPeoples));
  const std::string l(rng.pick(kPlaces));
  const std::string w(rng.pick(kWeapons));
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '{' && i + 2 < pattern.size() && pattern[i + 2] == '}') {
      switch (pattern[i + 1]) {
        case 'P': out += p; break;
        case 'Q': out += q; break;
        case 'N': out += n; break;
        case 'M': out += m; break;
        case 'L': out += l; break;
        case 'W': out += w; break;
        default: out.append(pattern.substr(i, 3));
      }
      i += 2;
    } else {
      out.push_back(pattern[i]);
    }
  }
  return out;
}

std::vector<std::string> expand(const LabelRegistry& registry, std::span<const std::size_t> support,
                                 std::size_t singleton_donor) {
  if (support.size() != registry.size()) {
    fail(ErrorKind::kConfiguration, "fixture label table does not match the " +
                                        std::string(to_string(registry.task())) + " registry");
  }
  std::vector<std::size_t> counts(support.begin(), support.end());
  for (auto& c : counts) c *= 5;
  // Labels without a published support count get a single event, taken from the donor.
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      counts[i] = 1;
      --counts[singleton_donor];
    }
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < counts.size(); ++i) out.insert(out.end(), counts[i], registry.label(i));
  return out;
}

void pin(std::vector<std::string>& labels, std::size_t slot, const std::string& label) {
  auto it = std::find(labels.begin() + static_cast<std::ptrdiff_t>(slot), labels.end(), label);
  if (it == labels.end()) fail(ErrorKind::kConfiguration, "fixture cannot pin label '" + label + "'");
  std::iter_swap(labels.begin() + static_cast<std::ptrdiff_t>(slot), it);
}

struct LabelSet {
  std::string level, context, motive, consequence;
};

std::string violent_sentence(const LabelSet& labels, const Options& options, bool mild, Rng& rng) {
  std::string core;
  if (mild) {
    core = fill(rng.pick(kMild), rng);
  } else if (!rng.chance(options.level_cue)) {
    core = fill(rng.pick(kLevelFree), rng);
  } else if (labels.level == "interpersonal") {
    core = fill(rng.pick(kInterpersonal), rng);
  } else if (labels.level == "intrapersonal") {
    core = fill(rng.pick(kIntrapersonal), rng);
  } else if (labels.level == "intersocial") {
    core = fill(rng.pick(kIntersocial), rng);
  } else {
    core = fill(rng.pick(kIntrasocial), rng);
  }
  if (auto it = kContextCue.find(labels.context); it != kContextCue.end() && rng.chance(options.label_cue)) {
    core += " " + fill(it->second, rng);
  }
  if (auto it = kMotiveCue.find(labels.motive); it != kMotiveCue.end() && rng.chance(options.label_cue)) {
    core += ", " + std::string(it->second);
  }
  std::string out = upper_first(core) + ".";
  if (auto it = kConsequenceCue.find(labels.consequence);
      it != kConsequenceCue.end() && rng.chance(options.label_cue)) {
    out += " " + std::string(rng.pick(kConsequenceLead)) + std::string(it->second) + ".";
  }
  return out;
}

std::string neutral_text(Rng& rng, std::size_t sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (!out.empty()) out += ' ';
    out += upper_first(fill(rng.pick(kNeutral), rng));
  }
  return out;
}

std::vector<std::size_t> chapter_sizes(std::size_t total, int forced_chapter, Rng& rng) {
  std::vector<std::size_t> sizes;
  std::size_t left = total;
  while (left > 0) {
    std::size_t s = 3 + rng.below(4);
    if (static_cast<int>(sizes.size()) + 1 == forced_chapter) s = 6;
    s = std::min(s, left);
    sizes.push_back(s);
    left -= s;
  }
  return sizes;
}

}  // namespace

std::span<const WorkSpec> plutarch_works() { return kWorks; }

Fixture generate(const Options& options) {
  Rng rng(options.seed);
  Fixture fx;

  // Sections and the violent subset of each work.
  std::vector<SourceRef> violent_refs;
  std::map<SourceRef, std::vector<std::size_t>> events_of;
  const SourceRef cleitus{"Alexander", 51, 5};
  const SourceRef tisaphernes{"Agesilaus", 10, 3};
  for (const auto& work : kWorks) {
    const int forced = work.work_id == "Alexander" ? 51 : work.work_id == "Agesilaus" ? 10 : -1;
    const auto sizes = chapter_sizes(work.sections, forced, rng);
    std::vector<SourceRef> refs;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      for (std::size_t s = 1; s <= sizes[c]; ++s) {
        refs.push_back({std::string(work.work_id), static_cast<int>(c + 1), static_cast<int>(s)});
      }
    }
    rng.shuffle(refs);
    for (const auto& pinned : {cleitus, tisaphernes}) {
      if (auto it = std::find(refs.begin(), refs.end(), pinned); it != refs.end()) std::iter_swap(refs.begin(), it);
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (i < work.violent) violent_refs.push_back(refs[i]);
      fx.passages.push_back(Passage{passage_id_for(refs[i]), refs[i], "", "en"});
    }
  }
  std::sort(fx.passages.begin(), fx.passages.end(), [](const auto& a, const auto& b) { return a.ref < b.ref; });

  // Event refs: one per violent section, a few doubled, two past the end of a
  // work, the rest from other authors.
  std::vector<SourceRef> event_refs;
  event_refs.push_back(cleitus);
  event_refs.push_back(tisaphernes);
  for (const auto& r : violent_refs) {
    if (r != cleitus && r != tisaphernes) event_refs.push_back(r);
  }
  for (std::size_t i = 0; i < kPlutarchEvents - violent_refs.size(); ++i) {
    event_refs.push_back(violent_refs[2 + rng.below(violent_refs.size() - 2)]);
  }
  event_refs.push_back({"Alexander", 200, 1});
  event_refs.push_back({"Caesar", 200, 2});
  for (std::size_t i = 0; i < kOtherAuthorEvents; ++i) {
    event_refs.push_back({std::string(kOtherWorks[i % std::size(kOtherWorks)]), static_cast<int>(1 + i / 24),
                          static_cast<int>(1 + (i / 4) % 6)});
  }

  const Registries registries;
  auto levels = expand(registries.get(Task::kLevel), kLevelSupport, 2);
  auto contexts = expand(registries.get(Task::kContext), kContextSupport, 2);
  auto motives = expand(registries.get(Task::kMotive), kMotiveSupport, 2);
  auto consequences = expand(registries.get(Task::kConsequence), kConsequenceSupport, 0);
  for (auto* column : {&levels, &contexts, &motives, &consequences}) {
    if (column->size() != event_refs.size()) fail(ErrorKind::kConfiguration, "fixture label totals disagree");
    rng.shuffle(*column);
  }
  pin(levels, 0, "interpersonal");
  pin(contexts, 0, "entertaining");
  pin(motives, 0, "emotional");
  pin(consequences, 0, "death");
  pin(levels, 1, "intersocial");
  pin(contexts, 1, "battle");
  pin(motives, 1, "tactical/strategical");
  pin(consequences, 1, "plunder");

  for (std::size_t i = 0; i < event_refs.size(); ++i) {
    CuratedEvent ev;
    ev.id = fmt::format("eris-{:05}", i + 1);
    ev.ref = event_refs[i];
    ev.level = levels[i];
    ev.context = contexts[i];
    ev.motive = motives[i];
    ev.consequence = consequences[i];
    if (i == 0) {
      ev.title = "Alexander kills Cleitus with a spear";
      ev.translation_text = std::string(kCleitusText);
      ev.extras = {{"weapon", "Spear"},
                   {"year", "328 B.C."},
                   {"location", "Maracanda (Samarkand)"},
                   {"period", "Hellenistic Greece"},
                   {"perpetrator", "Alexander III the Great"},
                   {"victim", "Cleitus the Black"}};
    } else if (i == 1) {
      ev.title = "The Greeks see Tisaphernes punished";
      ev.translation_text = std::string(kTisaphernesText);
    } else {
      const LabelSet labels{ev.level, ev.context, ev.motive, ev.consequence};
      ev.translation_text = violent_sentence(labels, options, rng.chance(options.mild_violence), rng);
      ev.title = "Violence in " + ev.ref.display();
    }
    events_of[ev.ref].push_back(i);
    fx.events.push_back(std::move(ev));
  }

  for (auto& p : fx.passages) {
    if (p.ref == cleitus || p.ref == tisaphernes) {
      p.text = fx.events[events_of[p.ref].front()].translation_text;
      continue;
    }
    std::vector<std::string> parts;
    if (auto it = events_of.find(p.ref); it != events_of.end()) {
      if (auto lead = rng.below(3); lead > 0) parts.push_back(neutral_text(rng, lead));
      for (auto idx : it->second) parts.push_back(fx.events[idx].translation_text);
      if (rng.chance(0.5)) parts.push_back(neutral_text(rng, 1));
    } else {
      parts.push_back(neutral_text(rng, 2 + rng.below(3)));
      if (rng.chance(options.distractor_rate)) {
        parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(rng.below(2)),
                     upper_first(fill(rng.pick(kDistractors), rng)));
      }
      if (rng.chance(options.hidden_violence)) {
        const LabelSet labels{levels[rng.below(levels.size())], "unknown", "unknown", "unknown"};
        parts.push_back(violent_sentence(labels, options, false, rng));
      }
    }
    std::string text;
    for (const auto& part : parts) {
      if (!text.empty()) text += ' ';
      text += part;
    }
    p.text = std::move(text);
  }
  return fx;
}

void write(const Fixture& fixture, const std::filesystem::path& dir) {
  const auto corpus = dir / "corpus";
  std::filesystem::create_directories(corpus);
  std::map<std::string, std::string> files;
  for (const auto& p : fixture.passages) {
    auto& out = files[p.ref.work_id];
    out += "@@ " + p.ref.work_id + " " + std::to_string(p.ref.chapter) + "." + std::to_string(p.ref.section) + "\n";
    out += p.text + "\n\n";
  }
  for (const auto& [work, contents] : files) text::write_file_atomic(corpus / (work + ".txt"), contents);
  std::vector<jsonl::json> rows;
  for (const auto& e : fixture.events) rows.push_back(jsonl::to_json(e));
  jsonl::write(dir / "events.jsonl", rows);
}

}  // namespace strife::fixture
