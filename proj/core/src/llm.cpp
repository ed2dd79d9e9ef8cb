#include "strife/llm.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "strife/errors.hpp"
#include "strife/text.hpp"
#include "strife/types.hpp"

namespace strife::llm {
namespace {

using nlohmann::json;

// ------------------------------------------------------------ stub rewrites

constexpr std::pair<std::string_view, std::string_view> kSwaps[] = {
    {"killed", "slew"},      {"battle", "engagement"}, {"city", "town"},        {"army", "host"},
    {"soldiers", "troops"},  {"said", "declared"},     {"great", "mighty"},     {"went", "proceeded"},
    {"people", "populace"},  {"king", "monarch"},      {"country", "land"},     {"friends", "companions"},
    {"wrote", "composed"},   {"began", "commenced"},   {"afterwards", "later"}, {"spear", "lance"},
    {"sword", "blade"},      {"death", "demise"},      {"wounded", "injured"},  {"citizens", "townsfolk"},
};

constexpr std::string_view kLeadingFunctionWords[] = {
    "A",   "An",    "And",  "As",    "At",      "After", "But",   "During", "For",    "He",   "Her",
    "His", "In",    "It",   "On",    "So",      "The",   "Then",  "There",  "These",  "They", "This",
    "To",  "When",  "While", "With", "Having", "Being", "Now",   "Once",   "Thus",   "She",  "Some",
};

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::string lower_first(std::string_view sentence) {
  std::string out(sentence);
  std::size_t end = 0;
  while (end < out.size() && is_ascii_alpha(out[end])) ++end;
  const std::string_view first(out.data(), end);
  for (auto w : kLeadingFunctionWords) {
    if (first == w) {
      out[0] = static_cast<char>(out[0] - 'A' + 'a');
      break;
    }
  }
  return out;
}

std::string upper_first(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string rotate_clauses(const std::string& sentence) {
  std::string body = sentence;
  char terminal = '.';
  if (!body.empty() && (body.back() == '.' || body.back() == '!' || body.back() == '?' || body.back() == ';')) {
    terminal = body.back();
    body.pop_back();
  }
  std::vector<std::string> clauses;
  std::size_t start = 0;
  while (true) {
    const auto pos = body.find(", ", start);
    if (pos == std::string::npos) {
      clauses.push_back(body.substr(start));
      break;
    }
    clauses.push_back(body.substr(start, pos - start));
    start = pos + 2;
  }
  if (clauses.size() < 2) return sentence;
  std::string out;
  for (std::size_t i = 1; i < clauses.size(); ++i) {
    out += clauses[i];
    out += ", ";
  }
  out += lower_first(clauses.front());
  out += terminal;
  return upper_first(out);
}

std::string swap_words(const std::string& sentence) {
  std::string out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (!is_ascii_alpha(sentence[i])) {
      out.push_back(sentence[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < sentence.size() && is_ascii_alpha(sentence[j])) ++j;
    const std::string word = sentence.substr(i, j - i);
    std::string replacement = word;
    for (const auto& [from, to] : kSwaps) {
      if (word == from) {
        replacement = std::string(to);
        break;
      }
    }
    out += replacement;
    i = j;
  }
  return out;
}

std::string stub_variant(const std::string& normalized, int index) {
  switch ((index - 1) % 3) {
    case 0:
      return "It is recorded that " + lower_first(normalized);
    case 1: {
      auto rotated = rotate_clauses(normalized);
      if (rotated != normalized) return rotated;
      return "According to the account, " + lower_first(normalized);
    }
    default: {
      auto swapped = swap_words(normalized);
      if (swapped != normalized) return swapped;
      return normalized + " So the account goes.";
    }
  }
}

// ------------------------------------------------------------ zero-shot lexicon

constexpr std::string_view kViolentStems[] = {
    "kill",    "slew",    "slain",   "slay",     "murder",   "stab",    "spear",   "sword",   "wound",
    "execut",  "behead",  "massacr", "slaughter", "blood",   "attack",  "assault", "arrest",  "banish",
    "exile",   "torture", "strangl", "poison",   "burnt alive", "put to death", "ran him through",
    "struck",  "fought",  "besieg",  "sack",     "storm",    "plunder", "captive", "mutilat", "suicide",
    "own life", "fell upon", "put to the sword", "cut down", "beat",    "flog",    "scourg",
};

}  // namespace

// ------------------------------------------------------------ HTTP transport

HttpChatTransport::HttpChatTransport(HttpTransportConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl)) {
    fail(ErrorKind::kConfiguration, "chat base URL must look like http(s)://host[:port][/path], got '" +
                                        config_.base_url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpChatTransport::send(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const json body{{"model", request.model_name},
                  {"temperature", request.temperature},
                  {"messages", json::array({json{{"role", "system"}, {"content", request.system_prompt}},
                                            json{{"role", "user"}, {"content", request.user_text}}})}};
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    throw TransportFailure("chat request failed: " + httplib::to_string(res.error()), true);
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportFailure("chat service returned HTTP " + std::to_string(res->status), true, res->status);
  }
  if (res->status != 200) {
    throw TransportFailure("chat service returned HTTP " + std::to_string(res->status) + ": " + res->body, false,
                           res->status);
  }
  try {
    const auto parsed = json::parse(res->body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportFailure(std::string("unexpected chat response schema: ") + e.what(), false, res->status);
  }
}

// ------------------------------------------------------------ rate limiting

TokenBucket::TokenBucket(double requests_per_minute, double burst, NowFn now, SleepFn sleep)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      now_(now ? std::move(now) : NowFn([] { return Clock::now(); })),
      sleep_(sleep ? std::move(sleep) : SleepFn([](Clock::duration d) { std::this_thread::sleep_for(d); })),
      last_(now_()) {
  if (!(requests_per_minute > 0.0)) {
    fail(ErrorKind::kConfiguration, "rate limit must be a positive number of requests per minute");
  }
}

void TokenBucket::refill(Clock::time_point now) {
  const std::chrono::duration<double> elapsed = now - last_;
  if (elapsed.count() > 0) {
    tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_second_);
    last_ = now;
  }
}

bool TokenBucket::try_acquire() {
  std::lock_guard lock(mu_);
  refill(now_());
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  while (true) {
    Clock::duration wait{};
    {
      std::lock_guard lock(mu_);
      refill(now_());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const double missing = 1.0 - tokens_;
      wait = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(missing / rate_per_second_));
      if (wait <= Clock::duration::zero()) wait = Clock::duration(1);
    }
    sleep_(wait);
  }
}

// ------------------------------------------------------------ client

ChatClient::ChatClient(std::shared_ptr<ChatTransport> transport, RetryPolicy retry,
                       std::shared_ptr<TokenBucket> limiter, SleepFn sleep)
    : transport_(std::move(transport)),
      retry_(retry),
      limiter_(std::move(limiter)),
      sleep_(sleep ? std::move(sleep) : SleepFn([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {
  if (!transport_) fail(ErrorKind::kConfiguration, "chat client needs a transport");
  if (retry_.max_retries < 0) fail(ErrorKind::kConfiguration, "max_retries must be >= 0");
}

std::string ChatClient::complete(const ChatRequest& request) {
  if (request.system_prompt.empty() || request.user_text.empty()) {
    fail(ErrorKind::kValidation, "chat request needs a system prompt and user text");
  }
  if (request.model_name.empty()) fail(ErrorKind::kConfiguration, "chat request needs a model name");
  if (request.temperature < 0.0) fail(ErrorKind::kConfiguration, "temperature must be >= 0");

  auto backoff = retry_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    if (limiter_) limiter_->acquire();
    ++attempts_;
    try {
      return transport_->send(request);
    } catch (const TransportFailure& f) {
      if (!f.retryable()) fail(ErrorKind::kClient, f.what());
      if (attempt >= retry_.max_retries) {
        fail(ErrorKind::kClient, std::string(f.what()) + " (gave up after " + std::to_string(attempt + 1) +
                                     " attempts)");
      }
      spdlog::debug("chat attempt {} failed: {}; retrying in {} ms", attempt + 1, f.what(), backoff.count());
    }
    sleep_(backoff);
    backoff = std::min(retry_.max_backoff,
                       std::chrono::milliseconds(static_cast<long long>(std::llround(
                           static_cast<double>(backoff.count()) * retry_.multiplier))));
  }
}

// ------------------------------------------------------------ cache

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(std::string_view prompt_checksum, std::string_view input_hash,
                                              int slot) const {
  const auto key = text::sha256_hex(std::string(prompt_checksum) + "\n" + std::string(input_hash) + "\n" +
                                    std::to_string(slot));
  return dir_ / (key + ".json");
}

std::optional<std::string> ResponseCache::get(std::string_view prompt_checksum, std::string_view input,
                                              int slot) const {
  const auto input_hash = text::sha256_hex(input);
  const auto path = path_for(prompt_checksum, input_hash, slot);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto record = json::parse(text::read_file(path));
    if (record.at("prompt_checksum") != prompt_checksum || record.at("input_hash") != input_hash) {
      return std::nullopt;
    }
    return record.at("response").get<std::string>();
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable cache record {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(std::string_view prompt_checksum, std::string_view input, int slot,
                        std::string_view response) {
  const auto input_hash = text::sha256_hex(input);
  const json record{{"prompt_checksum", prompt_checksum},
                    {"input_hash", input_hash},
                    {"slot", slot},
                    {"response", response}};
  text::write_file_atomic(path_for(prompt_checksum, input_hash, slot), record.dump(2));
}

// ------------------------------------------------------------ paraphrase

std::vector<std::string> parse_paraphrases(std::string_view response, int k) {
  static const std::regex kNumbered(R"(^\s*(?:\d+\s*[.):]|[-*•]|Paraphrase\s*\d+\s*:)\s*(.*)$)",
                                    std::regex::icase);
  std::vector<std::string> numbered;
  std::vector<std::string> plain;
  for (const auto& raw : text::split(response, '\n')) {
    auto line = text::trim(raw);
    if (line.empty()) continue;
    std::smatch m;
    if (std::regex_match(line, m, kNumbered)) {
      auto item = text::trim(m[1].str());
      if (!item.empty()) numbered.push_back(item);
    } else if (line.back() != ':') {
      plain.push_back(line);
    }
  }
  auto& items = numbered.empty() ? plain : numbered;
  for (auto& item : items) {
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
    item = text::normalize_whitespace(item);
  }
  std::erase_if(items, [](const std::string& s) { return s.empty(); });
  if (static_cast<int>(items.size()) < k) {
    fail(ErrorKind::kFormat, "expected " + std::to_string(k) + " paraphrases, response contained " +
                                 std::to_string(items.size()));
  }
  items.resize(static_cast<std::size_t>(k));
  return items;
}

ChatParaphraser::ChatParaphraser(std::shared_ptr<ChatClient> client, std::string model_name, double temperature)
    : client_(std::move(client)), model_name_(std::move(model_name)), temperature_(temperature) {}

std::vector<std::string> ChatParaphraser::paraphrase(std::string_view text, int k) {
  const auto normalized = text::normalize_whitespace(text);
  if (normalized.empty()) fail(ErrorKind::kValidation, "cannot paraphrase empty text");
  if (k < 1) fail(ErrorKind::kValidation, "k must be at least 1");
  ChatRequest request{std::string(prompts::paraphrase().text), normalized, model_name_, temperature_};
  return parse_paraphrases(client_->complete(request), k);
}

std::string ChatParaphraser::prompt_checksum() const {
  return text::sha256_hex(prompts::paraphrase().checksum() + "|" + model_name_ + "|" + std::to_string(temperature_));
}

std::vector<std::string> stub_rewrites(std::string_view text, int k) {
  const auto normalized = text::normalize_whitespace(text);
  if (normalized.empty()) fail(ErrorKind::kValidation, "cannot paraphrase empty text");
  if (k < 1) fail(ErrorKind::kValidation, "k must be at least 1");
  std::vector<std::string> out;
  for (int i = 1; i <= k; ++i) {
    auto variant = stub_variant(normalized, i);
    if (i > 3) variant = "Retold (" + std::to_string(i) + "): " + variant;
    out.push_back(std::move(variant));
  }
  return out;
}

std::vector<std::string> StubParaphraser::paraphrase(std::string_view text, int k) { return stub_rewrites(text, k); }

std::string StubParaphraser::prompt_checksum() const {
  return text::sha256_hex(prompts::paraphrase().checksum() + "|stub-rewrites-v1");
}

// ------------------------------------------------------------ zero-shot

ZeroShotResult parse_zero_shot(std::string_view raw_response) {
  static const std::regex kToken(R"(\[\s*(non[\s_-]?)?violent\s*\])", std::regex::icase);
  ZeroShotResult result;
  result.raw_response = std::string(raw_response);
  bool saw_violent = false;
  bool saw_nonviolent = false;
  const std::string haystack(raw_response);
  for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), kToken); it != std::sregex_iterator(); ++it) {
    if ((*it)[1].matched) {
      saw_nonviolent = true;
    } else {
      saw_violent = true;
    }
  }
  if (saw_violent != saw_nonviolent) {
    result.parse_ok = true;
    result.label = std::string(saw_violent ? kViolent : kNonViolent);
  }
  return result;
}

std::string resolve_label(const ZeroShotResult& result) {
  if (result.parse_ok && result.label) return *result.label;
  spdlog::warn("zero-shot response unparseable, counted as nonviolent: \"{}\"", result.raw_response);
  return std::string(kNonViolent);
}

ZeroShotAnnotator::ZeroShotAnnotator(std::shared_ptr<ChatClient> client, std::string model_name, double temperature,
                                     std::shared_ptr<ResponseCache> cache)
    : client_(std::move(client)),
      model_name_(std::move(model_name)),
      temperature_(temperature),
      cache_(std::move(cache)) {}

ZeroShotResult ZeroShotAnnotator::classify(std::string_view text) {
  const auto normalized = text::normalize_whitespace(text);
  if (normalized.empty()) fail(ErrorKind::kValidation, "cannot classify empty text");
  const auto checksum = text::sha256_hex(prompts::zero_shot().checksum() + "|" + model_name_ + "|" +
                                         std::to_string(temperature_));
  if (cache_) {
    if (auto hit = cache_->get(checksum, normalized, 0)) return parse_zero_shot(*hit);
  }
  ChatRequest request{std::string(prompts::zero_shot().text), normalized, model_name_, temperature_};
  auto response = client_->complete(request);
  if (cache_) cache_->put(checksum, normalized, 0, response);
  return parse_zero_shot(response);
}

std::string stub_zero_shot_response(std::string_view text) {
  const auto lowered = text::to_lower_ascii(text);
  for (auto stem : kViolentStems) {
    if (lowered.find(stem) != std::string::npos) return "[VIOLENT]";
  }
  return "[NON-VIOLENT]";
}

std::string StubChatTransport::send(const ChatRequest& request) {
  if (request.system_prompt == prompts::zero_shot().text) return stub_zero_shot_response(request.user_text);
  if (request.system_prompt == prompts::paraphrase().text) {
    std::string out;
    int i = 0;
    for (const auto& v : stub_rewrites(request.user_text, 3)) out += std::to_string(++i) + ". " + v + "\n";
    return out;
  }
  throw TransportFailure("stub transport does not know this prompt", false, 400);
}

}  // namespace strife::llm
