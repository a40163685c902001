// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// Chat-completion classification with closed-taxonomy validation,
// fine-tuning file construction, and a scripted local mock endpoint.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexsort/common.hpp"
#include "lexsort/corpus.hpp"

namespace lexsort {

inline constexpr std::string_view kApiKeyEnv = "LEXSORT_API_KEY";

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view chat_role_name(ChatRole role);
ChatRole parse_chat_role(std::string_view name);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

std::string_view system_prompt(Task task);

// Leading text of `text` up to the end of its window-th token; the whole text
// when it has at most `window` tokens.
std::string truncate_text(std::string_view text, std::size_t window);

std::vector<ChatMessage> build_prompt(Task task, std::string_view text, std::size_t window);

enum class InvalidReason { kOutOfTaxonomy, kEmpty, kTransportError };

std::string_view invalid_reason_name(InvalidReason reason);

struct ParsedLabel {
  std::optional<std::size_t> label;  // task-level index when valid
  InvalidReason reason = InvalidReason::kOutOfTaxonomy;

  bool valid() const { return label.has_value(); }
};

// Total: never throws. Lenient mode trims whitespace, quotes and a trailing
// period, ignores case and accepts the prompt's plural forms; strict mode
// requires a canonical label name exactly.
ParsedLabel parse_label(std::string_view raw, Task task, bool strict = false);

struct LlmConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model_name = "gpt-3.5-turbo";
  std::string api_key;  // sent only as "Authorization: Bearer <key>"
  std::size_t max_parallel = 4;
  double timeout_seconds = 30.0;
  std::size_t max_attempts = 3;
  double backoff_base_seconds = 0.5;
  std::size_t window = 800;
  bool strict = false;

  void validate() const;
  // Reads the key from LEXSORT_API_KEY; empty when unset.
  static std::string api_key_from_env();
};

struct LlmOutcome {
  std::string doc_id;
  std::string raw_response;
  ParsedLabel parsed;
  double latency_seconds = 0.0;
  std::size_t attempts = 0;
  int http_status = 0;  // last status seen; 0 when no response arrived
  std::string error;    // transport detail for kTransportError
};

// One request per document, at most max_parallel in flight, outcomes in input
// order. Per-document failures are reported in the outcome, never thrown.
std::vector<LlmOutcome> classify_remote(const LlmConfig& config,
                                        const std::vector<Document>& docs, Task task);

// Canonical label string for a document's observed label under `task`.
std::string observed_label_name(const Document& doc, Task task);

// Writes one chat-format JSON object per line; returns the record count.
// MultiClass requires every document to be observed Oil and Gas.
std::size_t build_finetune_file(const std::vector<Document>& docs, Task task,
                                std::size_t window, const std::filesystem::path& path);

struct FinetuneRecord {
  std::vector<ChatMessage> messages;
  std::string text() const;   // user content
  std::string label() const;  // assistant content
};

std::vector<FinetuneRecord> read_finetune_file(const std::filesystem::path& path);

// --- mock endpoint ----------------------------------------------------------

struct ScriptedResponse {
  int status = 200;
  std::string content;               // assistant message content on 2xx
  std::optional<std::string> body;   // raw body override
  std::optional<std::string> match;  // when set, used for requests containing it
  double delay_seconds = 0.0;
};

// Accepts an array whose entries are strings (200 with that content) or
// objects with keys status, content, body, match, delay_seconds.
std::vector<ScriptedResponse> parse_script(std::string_view json_text);
std::vector<ScriptedResponse> load_script(const std::filesystem::path& path);

struct RecordedRequest {
  std::string path;
  std::string authorization;
  std::string body;
};

// Serves POST /v1/chat/completions. Entries with `match` answer requests
// whose body contains that string; the others are served in order, the last
// one repeating.
class MockEndpoint {
 public:
  MockEndpoint(std::vector<ScriptedResponse> script, std::string host = "127.0.0.1",
               int port = 0);
  ~MockEndpoint();
  MockEndpoint(const MockEndpoint&) = delete;
  MockEndpoint& operator=(const MockEndpoint&) = delete;

  int port() const;
  std::string base_url() const;
  std::vector<RecordedRequest> requests() const;
  void stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace lexsort
