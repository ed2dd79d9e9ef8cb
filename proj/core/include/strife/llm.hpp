#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "strife/prompts.hpp"

namespace strife::llm {

struct ChatRequest {
  std::string system_prompt;
  std::string user_text;
  std::string model_name;
  double temperature = 0.0;
};

/// One failed attempt at the transport level.
class TransportFailure : public std::runtime_error {
 public:
  TransportFailure(const std::string& what, bool retryable, int http_status = 0)
      : std::runtime_error(what), retryable_(retryable), http_status_(http_status) {}
  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

/// Sends a single chat-completion request and returns the assistant message.
/// Throws TransportFailure; retrying is the caller's job.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string send(const ChatRequest& request) = 0;
};

struct HttpTransportConfig {
  /// Everything before "/chat/completions", e.g. "https://api.example.com/v1".
  std::string base_url;
  /// Name of the environment variable holding the bearer API key.
  std::string api_key_env = "STRIFE_API_KEY";
  std::chrono::seconds timeout{60};
};

/// Chat-completions over HTTP(S) using the common
/// {"model", "temperature", "messages": [...]} request schema.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(HttpTransportConfig config);
  std::string send(const ChatRequest& request) override;

 private:
  HttpTransportConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
};

/// Token bucket limiting requests per minute. Shared by all threads using a client.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;
  using SleepFn = std::function<void(Clock::duration)>;

  explicit TokenBucket(double requests_per_minute, double burst = 1.0, NowFn now = {}, SleepFn sleep = {});

  bool try_acquire();
  /// Blocks until a token is available.
  void acquire();

 private:
  void refill(Clock::time_point now);

  double rate_per_second_;
  double capacity_;
  double tokens_;
  NowFn now_;
  SleepFn sleep_;
  Clock::time_point last_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};
};

/// Rate-limited, retrying front end over a transport. Safe for concurrent use.
class ChatClient {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  ChatClient(std::shared_ptr<ChatTransport> transport, RetryPolicy retry = {},
             std::shared_ptr<TokenBucket> limiter = nullptr, SleepFn sleep = {});

  /// At most 1 + max_retries attempts; throws Error(kClient) once exhausted
  /// or on a non-retryable failure.
  std::string complete(const ChatRequest& request);

  std::size_t attempts() const noexcept { return attempts_.load(); }
  const RetryPolicy& retry_policy() const noexcept { return retry_; }

 private:
  std::shared_ptr<ChatTransport> transport_;
  RetryPolicy retry_;
  std::shared_ptr<TokenBucket> limiter_;
  SleepFn sleep_;
  std::atomic<std::size_t> attempts_{0};
};

/// On-disk cache of model responses, one JSON record per file:
/// {prompt_checksum, input_hash, slot, response}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(std::string_view prompt_checksum, std::string_view input, int slot) const;
  void put(std::string_view prompt_checksum, std::string_view input, int slot, std::string_view response);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(std::string_view prompt_checksum, std::string_view input_hash, int slot) const;
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------- paraphrase

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  /// k rewrites of `text`; throws Error(kClient) or Error(kFormat).
  virtual std::vector<std::string> paraphrase(std::string_view text, int k) = 0;
  /// Identifies prompt and settings for cache keys.
  virtual std::string prompt_checksum() const = 0;
};

/// Splits a numbered or bulleted list response into at least k rewrites.
std::vector<std::string> parse_paraphrases(std::string_view response, int k);

class ChatParaphraser final : public Paraphraser {
 public:
  ChatParaphraser(std::shared_ptr<ChatClient> client, std::string model_name, double temperature = 0.7);
  std::vector<std::string> paraphrase(std::string_view text, int k) override;
  std::string prompt_checksum() const override;

 private:
  std::shared_ptr<ChatClient> client_;
  std::string model_name_;
  double temperature_;
};

/// Deterministic template rewrites (framing, clause rotation, word swaps).
/// Every rewrite differs from the input after whitespace normalization.
std::vector<std::string> stub_rewrites(std::string_view text, int k);

class StubParaphraser final : public Paraphraser {
 public:
  std::vector<std::string> paraphrase(std::string_view text, int k) override;
  std::string prompt_checksum() const override;
};

// ---------------------------------------------------------------- zero-shot

struct ZeroShotResult {
  std::string raw_response;
  std::optional<std::string> label;  // violent / nonviolent, set iff parse_ok
  bool parse_ok = false;
};

/// Case-insensitive search for the bracketed [VIOLENT] / [NON-VIOLENT] tokens;
/// exactly one of the two kinds must occur.
ZeroShotResult parse_zero_shot(std::string_view raw_response);

/// Label to count for a result: the parsed label, or nonviolent (with an
/// audit log line) when the response was ambiguous.
std::string resolve_label(const ZeroShotResult& result);

class ZeroShotAnnotator {
 public:
  ZeroShotAnnotator(std::shared_ptr<ChatClient> client, std::string model_name, double temperature = 0.0,
                    std::shared_ptr<ResponseCache> cache = nullptr);

  ZeroShotResult classify(std::string_view text);

 private:
  std::shared_ptr<ChatClient> client_;
  std::string model_name_;
  double temperature_;
  std::shared_ptr<ResponseCache> cache_;
};

/// Offline transport answering both prompts deterministically: a keyword
/// lexicon for zero-shot annotation and stub_rewrites for paraphrasing.
class StubChatTransport final : public ChatTransport {
 public:
  std::string send(const ChatRequest& request) override;
};

/// The lexicon decision used by StubChatTransport.
std::string stub_zero_shot_response(std::string_view text);

}  // namespace strife::llm
