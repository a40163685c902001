// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

// JSON forms of the configuration types. Readers start from defaults and
// override only the keys present; unknown keys are rejected.

#pragma once

#include <json.hpp>

#include "lexsort/corpus.hpp"
#include "lexsort/ensemble.hpp"
#include "lexsort/eval.hpp"
#include "lexsort/explain.hpp"
#include "lexsort/llm.hpp"

namespace lexsort {

using Json = nlohmann::ordered_json;

Json to_json(const CorpusSpec& spec);
CorpusSpec corpus_spec_from_json(const nlohmann::json& j);

Json to_json(const SplitFractions& f);
SplitFractions split_fractions_from_json(const nlohmann::json& j);

Json to_json(const TrainConfig& c);
// Fields not present keep the values of `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base);

Json to_json(const EnsembleConfig& c);
// "task" is read first and selects the defaults the other keys override.
EnsembleConfig ensemble_config_from_json(const nlohmann::json& j);

// The api key is never part of the JSON form.
Json to_json(const LlmConfig& c);
LlmConfig llm_config_from_json(const nlohmann::json& j);

Json to_json(const SimulatedFinetune& s);
SimulatedFinetune simulated_finetune_from_json(const nlohmann::json& j);

Json to_json(const Attribution& a, Task task);
Attribution attribution_from_json(const nlohmann::json& j);

Json to_json(const LlmOutcome& o, Task task);

// Parses text as a JSON object; ValidationError otherwise.
nlohmann::json parse_json_object(std::string_view text, std::string_view what);

}  // namespace lexsort
