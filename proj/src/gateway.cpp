#include "cityvl/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"

namespace cityvl {

using nlohmann::json;

ContentPart ContentPart::make_text(std::string t) {
  ContentPart p;
  p.kind = Kind::text;
  p.text = std::move(t);
  return p;
}

ContentPart ContentPart::make_image(std::vector<std::uint8_t> bytes,
                                    std::string name) {
  ContentPart p;
  p.kind = Kind::image;
  p.image_bytes = std::move(bytes);
  p.image_name = std::move(name);
  return p;
}

std::string CompletionRequest::canonical_json() const {
  if (user_parts.empty()) throw Error("request needs at least one user part");
  // nlohmann objects keep keys sorted, which is exactly the canonical order.
  json j;
  j["max_output_tokens"] = max_output_tokens;
  j["model_id"] = model_id;
  j["system_text"] = system_text;
  j["temperature"] = temperature;
  json parts = json::array();
  for (const auto& part : user_parts) {
    if (part.kind == ContentPart::Kind::text) {
      parts.push_back({{"text", part.text}});
    } else {
      parts.push_back({{"image_name", part.image_name},
                       {"image_sha256", sha256_hex(part.image_bytes)}});
    }
  }
  j["user_parts"] = parts;
  return j.dump();
}

std::string CompletionRequest::request_key() const {
  return sha256_hex(canonical_json());
}

namespace {

const char* finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    default: return "error";
  }
}

FinishReason finish_reason_from(const std::string& s) {
  if (s == "stop") return FinishReason::stop;
  if (s == "length") return FinishReason::length;
  return FinishReason::error;
}

}  // namespace

std::string response_to_json(const CompletionResponse& resp) {
  json j;
  j["finish_reason"] = finish_reason_name(resp.finish_reason);
  j["input_tokens"] = resp.input_tokens;
  j["output_tokens"] = resp.output_tokens;
  j["text"] = resp.text;
  return j.dump();
}

CompletionResponse response_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  CompletionResponse resp;
  resp.text = j.at("text").get<std::string>();
  resp.finish_reason = finish_reason_from(j.at("finish_reason").get<std::string>());
  resp.input_tokens = j.at("input_tokens").get<std::size_t>();
  resp.output_tokens = j.at("output_tokens").get<std::size_t>();
  return resp;
}

void FixtureRecorder::add(const CompletionRequest& req,
                          const CompletionResponse& resp) {
  std::lock_guard lock(mu_);
  const std::string key = req.request_key();
  entries_[key] = {key, req.canonical_json(), response_to_json(resp)};
}

void FixtureRecorder::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& [key, entry] : entries_) {
    json j;
    j["request"] = json::parse(entry.request_json);
    j["request_key"] = key;
    j["response"] = json::parse(entry.response_json);
    out << j.dump() << "\n";
  }
}

std::size_t FixtureRecorder::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture_path) {
  std::ifstream in(fixture_path);
  if (!in) throw FileMissing(fixture_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    responses_[j.at("request_key").get<std::string>()] =
        response_from_json(j.at("response").dump());
  }
}

CompletionResponse ReplayTransport::send(const CompletionRequest& request) {
  auto it = responses_.find(request.request_key());
  if (it == responses_.end()) throw FixtureMiss(request.request_key());
  return it->second;
}

HttpTransport::HttpTransport(std::string endpoint, std::string api_key_env)
    : endpoint_(std::move(endpoint)), api_key_env_(std::move(api_key_env)) {}

CompletionResponse HttpTransport::send(const CompletionRequest& request) {
  // Provider wire format (openai-style chat completions) stays confined here.
  json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  json messages = json::array();
  if (!request.system_text.empty())
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  json content = json::array();
  for (const auto& part : request.user_parts) {
    if (part.kind == ContentPart::Kind::text) {
      content.push_back({{"type", "text"}, {"text", part.text}});
    } else {
      content.push_back({{"type", "image_ref"},
                         {"name", part.image_name},
                         {"sha256", sha256_hex(part.image_bytes)}});
    }
  }
  messages.push_back({{"role", "user"}, {"content", content}});
  body["messages"] = messages;

  httplib::Client client(endpoint_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env_.c_str()))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res)
    throw TransportError("connection to " + endpoint_ + " failed", true);
  if (res->status == 429 || res->status >= 500)
    throw TransportError("upstream status " + std::to_string(res->status), true);
  if (res->status != 200)
    throw TransportError("upstream status " + std::to_string(res->status), false);

  const json j = json::parse(res->body);
  CompletionResponse resp;
  resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  const std::string fr = j.at("choices").at(0).value("finish_reason", "stop");
  resp.finish_reason = finish_reason_from(fr);
  if (j.contains("usage")) {
    resp.input_tokens = j["usage"].value("prompt_tokens", 0);
    resp.output_tokens = j["usage"].value("completion_tokens", 0);
  }
  return resp;
}

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  sleep_ms_ = [](std::size_t ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  };
}

void Gateway::attach_recorder(std::shared_ptr<FixtureRecorder> recorder) {
  recorder_ = std::move(recorder);
}

void Gateway::set_sleeper(std::function<void(std::size_t)> sleep_ms) {
  sleep_ms_ = std::move(sleep_ms);
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
  const std::string key = request.request_key();

  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      cache_hits_.fetch_add(1);
      return it->second;
    }
  }

  if (upstream_calls_.load() >= config_.max_calls)
    throw BudgetExceeded("call ceiling " + std::to_string(config_.max_calls));
  if (total_tokens_.load() >= config_.max_total_tokens)
    throw BudgetExceeded("token ceiling " +
                         std::to_string(config_.max_total_tokens));

  // In-flight ceiling, released on every exit path.
  std::unique_lock flight(flight_mu_);
  flight_cv_.wait(flight, [&] { return in_flight_ < config_.in_flight_limit; });
  ++in_flight_;
  flight.unlock();
  struct FlightGuard {
    Gateway* g;
    ~FlightGuard() {
      std::lock_guard lock(g->flight_mu_);
      --g->in_flight_;
      g->flight_cv_.notify_one();
    }
  } guard{this};

  std::string last_error;
  for (std::size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0)
      sleep_ms_(config_.backoff_base_ms << (attempt - 1));
    if (upstream_calls_.fetch_add(1) >= config_.max_calls) {
      upstream_calls_.fetch_sub(1);
      throw BudgetExceeded("call ceiling " + std::to_string(config_.max_calls));
    }
    try {
      CompletionResponse resp = transport_->send(request);
      total_tokens_.fetch_add(resp.input_tokens + resp.output_tokens);
      {
        std::lock_guard lock(cache_mu_);
        cache_[key] = resp;
      }
      if (recorder_) recorder_->add(request, resp);
      return resp;
    } catch (const TransportError& e) {
      if (!e.transient()) throw;
      last_error = e.what();
    }
  }
  throw TransportExhausted(last_error);
}

}  // namespace cityvl
