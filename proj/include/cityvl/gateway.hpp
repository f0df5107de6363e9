#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cityvl {

struct ContentPart {
  enum class Kind : std::uint8_t { text, image };
  Kind kind = Kind::text;
  std::string text;
  std::vector<std::uint8_t> image_bytes;  // PNG bytes when kind == image
  std::string image_name;

  static ContentPart make_text(std::string t);
  static ContentPart make_image(std::vector<std::uint8_t> bytes,
                                std::string name);
};

struct CompletionRequest {
  std::string model_id;
  std::string system_text;
  std::vector<ContentPart> user_parts;
  double temperature = 0.7;
  std::size_t max_output_tokens = 1024;

  // Canonical serialization with sorted fields; image parts contribute their
  // content hash, so the key is content-addressed.
  std::string canonical_json() const;
  std::string request_key() const;  // sha256 of canonical_json
};

enum class FinishReason : std::uint8_t { stop, length, error };

struct CompletionResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
};

// One upstream call. Implementations throw TransportError (transient or not).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual CompletionResponse send(const CompletionRequest& request) = 0;
  // Replay-style transports perform no network activity.
  virtual bool offline() const { return false; }
};

struct FixtureEntry {
  std::string request_key;
  std::string request_json;
  std::string response_json;
};

std::string response_to_json(const CompletionResponse& resp);
CompletionResponse response_from_json(const std::string& json_text);

// Accumulates (request_key, request, response) triples; save() writes JSONL
// sorted by request_key so re-recording an identical session reproduces the
// file byte for byte.
class FixtureRecorder {
 public:
  void add(const CompletionRequest& req, const CompletionResponse& resp);
  void save(const std::filesystem::path& path) const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, FixtureEntry> entries_;
};

class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture_path);
  CompletionResponse send(const CompletionRequest& request) override;
  bool offline() const override { return true; }
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, CompletionResponse> responses_;
};

// OpenAI-style chat completions over HTTP(S). The api key is read from the
// named environment variable, never from configuration files.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key_env);
  CompletionResponse send(const CompletionRequest& request) override;

 private:
  std::string endpoint_;
  std::string api_key_env_;
};

struct GatewayConfig {
  std::string model_id;
  std::size_t in_flight_limit = 4;
  std::size_t max_attempts = 5;
  std::size_t backoff_base_ms = 1000;  // doubles per retry
  std::size_t max_calls = SIZE_MAX;
  std::size_t max_total_tokens = SIZE_MAX;
};

// Shared, thread-safe front end over one provider transport: caching on
// request_key, exponential-backoff retries on transient failures, budget
// accounting, and an in-flight ceiling.
class Gateway {
 public:
  Gateway(GatewayConfig config, std::shared_ptr<Transport> transport);

  CompletionResponse complete(const CompletionRequest& request);

  void attach_recorder(std::shared_ptr<FixtureRecorder> recorder);
  const GatewayConfig& config() const { return config_; }

  std::size_t upstream_calls() const { return upstream_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t total_tokens() const { return total_tokens_.load(); }
  bool offline() const { return transport_->offline(); }

  // Test seam: replaces the blocking sleep between retries.
  void set_sleeper(std::function<void(std::size_t)> sleep_ms);

 private:
  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<FixtureRecorder> recorder_;
  std::function<void(std::size_t)> sleep_ms_;

  std::mutex cache_mu_;
  std::map<std::string, CompletionResponse> cache_;

  std::mutex flight_mu_;
  std::condition_variable flight_cv_;
  std::size_t in_flight_ = 0;

  std::atomic<std::size_t> upstream_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> total_tokens_{0};
};

}  // namespace cityvl
