// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/llm.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lexsort/featurize.hpp"

namespace lexsort {
namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr std::string_view kBinaryPrompt =
    "Classify documents as either 'Oil and Gas Document' or 'Other' based on text entered.";
constexpr std::string_view kMultiClassPrompt =
    "Classify documents as one of the following: 'Affidavits of Non-Production', "
    "'Affidavits of Production', 'Assignment of Oil and Gas Lease', 'Correction Documents', "
    "'Extension', 'Memorandum of Lease', 'Oil and Gas Lease', 'Releases', 'Top Lease'.";

// Names used by the multi-class prompt, indexed like the subclasses.
constexpr std::array<std::string_view, kSubclassCount> kPromptNames = {
    "Affidavits of Non-Production", "Affidavits of Production",
    "Assignment of Oil and Gas Lease", "Correction Documents",
    "Extension",                    "Memorandum of Lease",
    "Oil and Gas Lease",            "Releases",
    "Top Lease",
};

constexpr std::string_view kChatPath = "/v1/chat/completions";

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim_spaces(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Strips whitespace, ASCII and typographic quotes and a trailing period
// until nothing changes.
std::string_view normalize(std::string_view s) {
  static constexpr std::string_view kQuotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                 "\xE2\x80\x98", "\xE2\x80\x99"};
  for (;;) {
    const std::size_t before = s.size();
    s = trim_spaces(s);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    for (auto q : kQuotes) {
      if (s.starts_with(q)) s.remove_prefix(q.size());
      if (s.ends_with(q)) s.remove_suffix(q.size());
    }
    if (s.size() == before) return s;
  }
}

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("base_url must start with http:// or https:// (got '" + url + "')");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ValidationError("unsupported base_url scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ValidationError("this build has no TLS support; use http://");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (e.scheme_host_port.size() <= scheme_end + 3) throw ValidationError("base_url has no host");
  e.path = prefix + std::string(kChatPath);
  return e;
}

std::string request_body(const LlmConfig& config, const std::vector<ChatMessage>& messages) {
  ordered_json body;
  body["model"] = config.model_name;
  body["messages"] = ordered_json::array();
  for (const auto& m : messages)
    body["messages"].push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
  body["temperature"] = 0;
  return body.dump();
}

std::optional<std::string> completion_content(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const auto& msg = first["message"];
  if (!msg.is_object() || !msg.contains("content")) return std::nullopt;
  if (msg["content"].is_null()) return std::string();
  if (!msg["content"].is_string()) return std::nullopt;
  return msg["content"].get<std::string>();
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

LlmOutcome classify_one(httplib::Client& client, const Endpoint& endpoint,
                        const LlmConfig& config, const Document& doc, Task task) {
  LlmOutcome out;
  out.doc_id = doc.id;
  const std::string body = request_body(config, build_prompt(task, doc.text, config.window));
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);

  const auto t0 = Clock::now();
  for (std::size_t attempt = 1; attempt <= config.max_attempts; ++attempt) {
    out.attempts = attempt;
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    bool retry = false;
    if (!res) {
      out.http_status = 0;
      out.error = "transport error: " + httplib::to_string(res.error());
      retry = true;
    } else {
      out.http_status = res->status;
      if (res->status >= 200 && res->status < 300) {
        const auto content = completion_content(res->body);
        if (content) {
          out.raw_response = *content;
          out.parsed = parse_label(*content, task, config.strict);
          out.error.clear();
        } else {
          out.parsed = {std::nullopt, InvalidReason::kTransportError};
          out.error = "malformed completion response";
        }
        out.latency_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        return out;
      }
      out.error = "HTTP " + std::to_string(res->status);
      retry = retryable_status(res->status);
    }
    if (!retry) break;
    if (attempt < config.max_attempts) {
      const double wait = config.backoff_base_seconds * std::ldexp(1.0, static_cast<int>(attempt) - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
  }
  out.parsed = {std::nullopt, InvalidReason::kTransportError};
  out.latency_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

void set_timeouts(httplib::Client& client, double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
  client.set_connection_timeout(whole, usec);
  client.set_read_timeout(whole, usec);
  client.set_write_timeout(whole, usec);
}

ChatMessage message_from_json(const nlohmann::json& m) {
  if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
      !m["role"].is_string() || !m["content"].is_string())
    throw ValidationError("message needs string fields role and content");
  return {parse_chat_role(m["role"].get<std::string>()), m["content"].get<std::string>()};
}

}  // namespace

std::string_view chat_role_name(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

ChatRole parse_chat_role(std::string_view name) {
  if (name == "system") return ChatRole::kSystem;
  if (name == "user") return ChatRole::kUser;
  if (name == "assistant") return ChatRole::kAssistant;
  throw ValidationError("unknown chat role '" + std::string(name) + "'");
}

std::string_view system_prompt(Task task) {
  return task == Task::kBinary ? kBinaryPrompt : kMultiClassPrompt;
}

std::string truncate_text(std::string_view text, std::size_t window) {
  if (window == 0) throw ValidationError("window must be >= 1");
  const TokenSequence seq = tokenize(text);
  if (seq.size() <= window) return std::string(text);
  return std::string(text.substr(0, seq.offsets[window - 1].end));
}

std::vector<ChatMessage> build_prompt(Task task, std::string_view text, std::size_t window) {
  return {{ChatRole::kSystem, std::string(system_prompt(task))},
          {ChatRole::kUser, truncate_text(text, window)}};
}

std::string_view invalid_reason_name(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::kOutOfTaxonomy: return "out_of_taxonomy";
    case InvalidReason::kEmpty: return "empty";
    case InvalidReason::kTransportError: return "transport_error";
  }
  return "out_of_taxonomy";
}

ParsedLabel parse_label(std::string_view raw, Task task, bool strict) {
  const std::size_t n = task_label_count(task);
  if (strict) {
    if (raw.empty()) return {std::nullopt, InvalidReason::kEmpty};
    for (std::size_t i = 0; i < n; ++i)
      if (raw == task_label_name(task, i)) return {i, InvalidReason::kOutOfTaxonomy};
    return {std::nullopt, InvalidReason::kOutOfTaxonomy};
  }
  const std::string_view core = normalize(raw);
  if (core.empty()) return {std::nullopt, InvalidReason::kEmpty};
  const std::string key = lower(core);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string canonical = lower(task_label_name(task, i));
    if (key == canonical || key == canonical + "s") return {i, InvalidReason::kOutOfTaxonomy};
    if (task == Task::kMultiClass && key == lower(kPromptNames[i]))
      return {i, InvalidReason::kOutOfTaxonomy};
  }
  return {std::nullopt, InvalidReason::kOutOfTaxonomy};
}

void LlmConfig::validate() const {
  if (max_parallel == 0) throw ValidationError("max_parallel must be >= 1");
  if (max_attempts == 0) throw ValidationError("max_attempts must be >= 1");
  if (window == 0) throw ValidationError("window must be >= 1");
  if (!(timeout_seconds > 0.0) || !std::isfinite(timeout_seconds))
    throw ValidationError("timeout_seconds must be > 0");
  if (!(backoff_base_seconds >= 0.0) || !std::isfinite(backoff_base_seconds))
    throw ValidationError("backoff_base_seconds must be >= 0");
  if (model_name.empty()) throw ValidationError("model_name must not be empty");
  parse_base_url(base_url);
}

std::string LlmConfig::api_key_from_env() {
  const char* v = std::getenv(std::string(kApiKeyEnv).c_str());
  return v ? std::string(v) : std::string();
}

std::vector<LlmOutcome> classify_remote(const LlmConfig& config,
                                        const std::vector<Document>& docs, Task task) {
  config.validate();
  const Endpoint endpoint = parse_base_url(config.base_url);
  std::vector<LlmOutcome> outcomes(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    httplib::Client client(endpoint.scheme_host_port);
    set_timeouts(client, config.timeout_seconds);
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        outcomes[i] = classify_one(client, endpoint, config, docs[i], task);
      } catch (const std::exception& e) {
        outcomes[i].doc_id = docs[i].id;
        outcomes[i].parsed = {std::nullopt, InvalidReason::kTransportError};
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.max_parallel, docs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  if (n_threads > 0) worker();
  for (auto& th : pool) th.join();
  return outcomes;
}

std::string observed_label_name(const Document& doc, Task task) {
  const auto idx = task_index(doc.observed_label, task);
  if (!idx)
    throw ValidationError("document " + doc.id + " has no " + std::string(task_name(task)) +
                          " label (multi-class needs Oil and Gas documents)");
  return std::string(task_label_name(task, *idx));
}

std::size_t build_finetune_file(const std::vector<Document>& docs, Task task,
                                std::size_t window, const std::filesystem::path& path) {
  if (window == 0) throw ValidationError("window must be >= 1");
  std::vector<std::string> lines;
  lines.reserve(docs.size());
  for (const auto& d : docs) {
    ordered_json rec;
    rec["messages"] = ordered_json::array();
    for (const auto& m : build_prompt(task, d.text, window))
      rec["messages"].push_back({{"role", chat_role_name(m.role)}, {"content", m.content}});
    rec["messages"].push_back({{"role", "assistant"}, {"content", observed_label_name(d, task)}});
    lines.push_back(rec.dump());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return lines.size();
}

std::string FinetuneRecord::text() const {
  for (const auto& m : messages)
    if (m.role == ChatRole::kUser) return m.content;
  return {};
}

std::string FinetuneRecord::label() const {
  for (const auto& m : messages)
    if (m.role == ChatRole::kAssistant) return m.content;
  return {};
}

std::vector<FinetuneRecord> read_finetune_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<FinetuneRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_spaces(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("messages") || !j["messages"].is_array())
      throw ValidationError(where + "expected an object with a messages array");
    FinetuneRecord rec;
    try {
      for (const auto& m : j["messages"]) rec.messages.push_back(message_from_json(m));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// --- mock endpoint ----------------------------------------------------------

std::vector<ScriptedResponse> parse_script(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw ValidationError("mock script must be a JSON array");
  std::vector<ScriptedResponse> out;
  for (const auto& e : j) {
    ScriptedResponse r;
    if (e.is_string()) {
      r.content = e.get<std::string>();
    } else if (e.is_object()) {
      for (const auto& [key, unused] : e.items())
        if (key != "status" && key != "content" && key != "body" && key != "match" &&
            key != "delay_seconds")
          throw ValidationError("unknown mock script key '" + key + "'");
      try {
        r.status = e.value("status", 200);
        r.content = e.value("content", std::string());
        if (e.contains("body")) r.body = e["body"].get<std::string>();
        if (e.contains("match")) r.match = e["match"].get<std::string>();
        r.delay_seconds = e.value("delay_seconds", 0.0);
      } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("bad mock script entry: ") + ex.what());
      }
      if (r.status < 100 || r.status > 599)
        throw ValidationError("mock script status must be an HTTP status code");
      if (r.delay_seconds < 0.0) throw ValidationError("mock script delay must be >= 0");
    } else {
      throw ValidationError("mock script entries must be strings or objects");
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ValidationError("mock script must not be empty");
  return out;
}

std::vector<ScriptedResponse> load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

struct MockEndpoint::State {
  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;
  std::vector<ScriptedResponse> matched;
  std::vector<ScriptedResponse> sequence;
  std::size_t served = 0;
  std::vector<RecordedRequest> log;
  mutable std::mutex mu;
  bool stopped = false;
};

MockEndpoint::MockEndpoint(std::vector<ScriptedResponse> script, std::string host, int port)
    : state_(std::make_unique<State>()) {
  if (script.empty()) throw ValidationError("mock script must not be empty");
  State& st = *state_;
  st.host = std::move(host);
  for (auto& r : script) (r.match ? st.matched : st.sequence).push_back(std::move(r));

  st.server.Post(R"(.*/v1/chat/completions)", [&st](const httplib::Request& req,
                                                    httplib::Response& res) {
    ScriptedResponse r;
    std::size_t serial = 0;
    {
      std::lock_guard lock(st.mu);
      st.log.push_back({req.path, req.get_header_value("Authorization"), req.body});
      serial = st.log.size();
      const auto hit = std::find_if(st.matched.begin(), st.matched.end(), [&](const auto& m) {
        return req.body.find(*m.match) != std::string::npos;
      });
      if (hit != st.matched.end()) {
        r = *hit;
      } else if (!st.sequence.empty()) {
        r = st.sequence[std::min(st.served, st.sequence.size() - 1)];
        ++st.served;
      } else {
        r.status = 500;
        r.body = R"({"error":{"message":"no scripted response matches"}})";
      }
    }
    if (r.delay_seconds > 0.0)
      std::this_thread::sleep_for(std::chrono::duration<double>(r.delay_seconds));
    res.status = r.status;
    if (r.body) {
      res.set_content(*r.body, "application/json");
      return;
    }
    if (r.status >= 200 && r.status < 300) {
      const auto in = nlohmann::json::parse(req.body, nullptr, false);
      ordered_json out;
      out["id"] = "mock-" + std::to_string(serial);
      out["object"] = "chat.completion";
      out["model"] = in.is_object() && in.contains("model") && in["model"].is_string()
                         ? in["model"].get<std::string>()
                         : std::string("mock");
      out["choices"] = ordered_json::array(
          {{{"index", 0},
            {"message", {{"role", "assistant"}, {"content", r.content}}},
            {"finish_reason", "stop"}}});
      res.set_content(out.dump(), "application/json");
    } else {
      ordered_json err;
      err["error"] = {{"message", r.content.empty() ? "scripted failure" : r.content}};
      res.set_content(err.dump(), "application/json");
    }
  });

  if (port == 0)
    st.port = st.server.bind_to_any_port(st.host);
  else
    st.port = st.server.bind_to_port(st.host, port) ? port : -1;
  if (st.port <= 0)
    throw IoError("mock endpoint cannot bind " + st.host + ":" + std::to_string(port));
  st.thread = std::thread([&st]() { st.server.listen_after_bind(); });
  st.server.wait_until_ready();
}

MockEndpoint::~MockEndpoint() { stop(); }

int MockEndpoint::port() const { return state_->port; }

std::string MockEndpoint::base_url() const {
  return "http://" + state_->host + ":" + std::to_string(state_->port);
}

std::vector<RecordedRequest> MockEndpoint::requests() const {
  std::lock_guard lock(state_->mu);
  return state_->log;
}

void MockEndpoint::stop() {
  if (!state_ || state_->stopped) return;
  state_->stopped = true;
  state_->server.stop();
  if (state_->thread.joinable()) state_->thread.join();
}

}  // namespace lexsort
