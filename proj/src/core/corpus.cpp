// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lexsort/featurize.hpp"

namespace lexsort {
namespace {

constexpr std::array<std::string_view, kSubclassCount> kSubclassNames = {
    "Affidavit of Non-Production",
    "Affidavit of Production",
    "Assignment of Oil and Gas Lease",
    "Correction",
    "Extension",
    "Memorandum of Lease",
    "Oil and Gas Lease",
    "Release",
    "Top Lease",
};

constexpr std::string_view kOilAndGasName = "Oil and Gas Document";
constexpr std::string_view kOtherName = "Other";

// Filler words shared by every category. Some domain words ("lease",
// "royalty", "mineral") appear here on purpose so that single words are not
// sufficient evidence for a class.
constexpr std::string_view kBoilerplate[] = {
    "the", "of", "and", "to", "in", "said", "this", "by", "for", "as", "be", "or",
    "is", "on", "that", "such", "with", "any", "all", "which", "shall", "herein",
    "hereby", "parties", "party", "grantor", "grantee", "county", "state", "recorded",
    "page", "book", "volume", "instrument", "following", "described", "land",
    "lands", "tract", "acres", "section", "township", "range", "survey", "abstract",
    "north", "south", "east", "west", "feet", "line", "corner", "thence", "beginning",
    "containing", "more", "less", "witness", "whereof", "executed", "day", "month",
    "year", "notary", "public", "commission", "expires", "personally", "appeared",
    "before", "me", "known", "acknowledged", "same", "purposes", "consideration",
    "dollars", "receipt", "sufficiency", "acknowledge", "heirs", "successors",
    "assigns", "forever", "defend", "title", "interest", "rights", "property",
    "premises", "agreement", "terms", "conditions", "provisions", "herein", "above",
    "under", "pursuant", "subject", "record", "office", "clerk", "filed", "dated",
    "effective", "date", "signature", "name", "address", "mailing", "lease",
    "royalty", "mineral", "minerals", "surface", "owner", "owners", "estate",
    "undivided", "fee", "simple", "legal", "description", "exhibit", "attached",
    "made", "part", "hereof", "whereas", "now", "therefore", "covenant", "warrant",
    "convey", "conveyed", "granted", "bargained", "sold", "together", "appurtenances",
    "thereunto", "belonging", "hold", "unto", "against", "every", "person", "whomsoever",
    "lawfully", "claiming", "claim", "thereof", "taxes", "assessments", "paid",
    "current", "prior", "instruments", "reservations", "exceptions", "easements",
    "restrictions", "apparent", "matters", "affecting", "its", "their", "his", "her",
    "municipal", "district", "judicial", "court", "probate", "estate", "deceased",
    "trustee", "trust", "beneficiary", "corporation", "company", "limited", "liability",
    "partnership", "individual", "capacity", "authorized", "representative", "agent",
    "attorney", "fact", "power", "delivered", "accepted", "notice", "copy", "original",
    "true", "correct", "full", "force", "effect", "renewal", "term", "years", "time",
    "therein", "set", "forth", "including", "without", "limitation", "respect",
    "operations", "drilling", "well", "wells", "unit", "pooled", "production", "gas",
};

constexpr std::string_view kStates[] = {
    "Texas",     "Oklahoma",     "New Mexico", "North Dakota", "Colorado", "Wyoming",
    "Louisiana", "Pennsylvania", "Ohio",       "West Virginia", "Kansas",  "Montana",
};

constexpr std::string_view kCountyStems[] = {
    "Reeves",  "Midland", "Ector",  "Loving", "Grady",   "Kingfisher", "Eddy",
    "Lea",     "McKenzie", "Weld",  "Campbell", "Caddo", "Washington", "Greene",
    "Belmont", "Doddridge", "Barber", "Richland", "Karnes", "Dimmit",  "Canadian",
    "Garfield", "Stark",   "Noble",
};

std::string pseudo_word(std::size_t index) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m",
                                                 "n", "p", "r", "s", "t", "v", "z"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
  std::string word;
  std::size_t x = index + 1;
  do {
    word += kOnsets[x % std::size(kOnsets)];
    x /= std::size(kOnsets);
    word += kVowels[x % std::size(kVowels)];
    x /= std::size(kVowels);
  } while (x > 0);
  return word + "x";  // suffix keeps synthetic words disjoint from real ones
}

std::vector<std::string> phrase_tokens(const std::string& phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase).tokens) out.push_back(t);
  return out;
}

nlohmann::ordered_json label_json(const Label& label, nlohmann::ordered_json& rec,
                                  const char* binary_key, const char* subclass_key) {
  rec[binary_key] = std::string(binary_label_name(label.binary));
  if (label.subclass)
    rec[subclass_key] = std::string(subclass_name(*label.subclass));
  else
    rec[subclass_key] = nullptr;
  return rec;
}

Label label_from_json(const nlohmann::json& rec, const char* binary_key,
                      const char* subclass_key, std::size_t line_no) {
  const auto where = " (line " + std::to_string(line_no) + ")";
  if (!rec.contains(binary_key) || !rec[binary_key].is_string())
    throw ValidationError(std::string("missing string field '") + binary_key + "'" +
                          where);
  Label label;
  try {
    label.binary = parse_binary_label_name(rec[binary_key].get<std::string>());
    if (rec.contains(subclass_key) && !rec[subclass_key].is_null()) {
      if (!rec[subclass_key].is_string())
        throw ValidationError(std::string("field '") + subclass_key +
                              "' must be a string or null" + where);
      label.subclass = parse_subclass_name(rec[subclass_key].get<std::string>());
    }
  } catch (const TaxonomyError& e) {
    throw TaxonomyError(e.what() + where);
  }
  if (!label.is_valid())
    throw TaxonomyError(std::string("label '") + binary_key +
                        "' inconsistent with subclass" + where);
  return label;
}

std::string required_string(const nlohmann::json& rec, const char* key,
                            std::size_t line_no) {
  if (!rec.contains(key) || !rec[key].is_string())
    throw ValidationError(std::string("missing string field '") + key + "' (line " +
                          std::to_string(line_no) + ")");
  return rec[key].get<std::string>();
}

}  // namespace

std::string_view binary_label_name(BinaryLabel label) {
  return label == BinaryLabel::kOilAndGas ? kOilAndGasName : kOtherName;
}

std::string_view subclass_name(Subclass subclass) {
  return kSubclassNames[static_cast<std::size_t>(subclass)];
}

BinaryLabel parse_binary_label_name(std::string_view name) {
  if (name == kOilAndGasName) return BinaryLabel::kOilAndGas;
  if (name == kOtherName) return BinaryLabel::kOther;
  throw TaxonomyError("unknown binary label '" + std::string(name) + "'");
}

Subclass parse_subclass_name(std::string_view name) {
  for (std::size_t i = 0; i < kSubclassNames.size(); ++i)
    if (kSubclassNames[i] == name) return static_cast<Subclass>(i);
  throw TaxonomyError("unknown subclass '" + std::string(name) + "'");
}

Label Label::from_category(std::size_t category) {
  if (category == kOtherCategory) return other();
  if (category > kOtherCategory)
    throw ValidationError("category index out of range: " + std::to_string(category));
  return oil_and_gas(static_cast<Subclass>(category));
}

std::size_t Label::category() const {
  return subclass ? static_cast<std::size_t>(*subclass) : kOtherCategory;
}

bool Label::is_valid() const {
  return (binary == BinaryLabel::kOilAndGas) == subclass.has_value();
}

std::optional<std::size_t> task_index(const Label& label, Task task) {
  if (task == Task::kBinary) return static_cast<std::size_t>(label.binary);
  if (!label.subclass) return std::nullopt;
  return static_cast<std::size_t>(*label.subclass);
}

std::string_view task_label_name(Task task, std::size_t index) {
  if (task == Task::kBinary) {
    if (index > 1) throw ValidationError("binary label index out of range");
    return binary_label_name(static_cast<BinaryLabel>(index));
  }
  if (index >= kSubclassCount) throw ValidationError("subclass index out of range");
  return kSubclassNames[index];
}

std::vector<std::string> task_label_names(Task task) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < task_label_count(task); ++i)
    out.emplace_back(task_label_name(task, i));
  return out;
}

Dataset::Dataset(std::vector<Document> documents, std::string provenance)
    : documents_(std::move(documents)), provenance_(std::move(provenance)) {
  if (documents_.empty()) throw ValidationError("dataset is empty");
  std::unordered_set<std::string_view> ids;
  ids.reserve(documents_.size());
  for (const auto& d : documents_) {
    if (!ids.insert(d.id).second)
      throw ValidationError("duplicate document id '" + d.id + "'");
    if (!d.true_label.is_valid() || !d.observed_label.is_valid())
      throw TaxonomyError("document '" + d.id + "' has an inconsistent label");
  }
}

std::array<double, kCategoryCount> CorpusSpec::default_class_mix() {
  std::array<double, kCategoryCount> mix{};
  for (std::size_t c = 0; c < kSubclassCount; ++c) mix[c] = 0.5 / kSubclassCount;
  mix[kOtherCategory] = 0.5;
  return mix;
}

std::array<std::vector<std::string>, kCategoryCount>
CorpusSpec::default_signature_phrases() {
  return {{
      {"affidavit of non production", "has not produced in paying quantities",
       "no production from the well"},
      {"affidavit of production", "is currently producing in paying quantities",
       "well continues to produce"},
      {"assignment of oil and gas lease", "assignor hereby assigns",
       "working interest is assigned"},
      {"correction instrument", "corrects the legal description",
       "scrivener error in the original"},
      {"extension of oil and gas lease", "primary term is hereby extended",
       "extension bonus paid"},
      {"memorandum of oil and gas lease", "this memorandum gives notice",
       "memorandum of lease"},
      {"oil and gas lease", "lessor hereby leases exclusively",
       "royalty of one eighth"},
      {"release of oil and gas lease", "lessee hereby releases",
       "surrender and release all rights"},
      {"top lease", "subject to the existing lease", "top lessee shall"},
      {"warranty deed", "deed of trust", "mechanics lien", "easement agreement",
       "satisfaction of mortgage"},
  }};
}

void CorpusSpec::validate() const {
  if (n_documents == 0) throw ValidationError("n_documents must be >= 1");
  double sum = 0.0;
  for (double p : class_mix) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ValidationError("class_mix entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("class_mix must sum to 1");
  if (min_tokens == 0 || min_tokens > max_tokens)
    throw ValidationError("doc_length_range must satisfy 1 <= min <= max");
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (signature_phrases[c].empty())
      throw ValidationError("signature_phrases: category " +
                            std::string(c == kOtherCategory
                                            ? kOtherName
                                            : kSubclassNames[c]) +
                            " has no signature phrase");
    for (const auto& p : signature_phrases[c])
      if (tokenize(p).tokens.empty())
        throw ValidationError("signature_phrases: phrase '" + p + "' has no tokens");
  }
  if (min_signatures == 0 || min_signatures > max_signatures)
    throw ValidationError("signatures per document must satisfy 1 <= min <= max");
  if (boilerplate_vocab_size == 0)
    throw ValidationError("boilerplate_vocab_size must be >= 1");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5))
    throw ValidationError("noise_rate must lie in [0, 0.5)");
}

std::vector<std::string> boilerplate_vocabulary(std::size_t size) {
  std::vector<std::string> words;
  std::unordered_set<std::string_view> seen;
  for (auto w : kBoilerplate) {
    if (words.size() == size) break;
    if (seen.insert(w).second) words.emplace_back(w);
  }
  for (std::size_t i = 0; words.size() < size; ++i) words.push_back(pseudo_word(i));
  return words;
}

Dataset generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const auto vocab = boilerplate_vocabulary(spec.boilerplate_vocab_size);
  // Zipf-like filler frequencies.
  std::vector<double> cumulative(vocab.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), 0.9);
    cumulative[r] = acc;
  }
  auto draw_word = [&]() -> const std::string& {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return vocab[static_cast<std::size_t>(it - cumulative.begin())];
  };

  std::array<std::vector<std::vector<std::string>>, kCategoryCount> phrases;
  for (std::size_t c = 0; c < kCategoryCount; ++c)
    for (const auto& p : spec.signature_phrases[c]) phrases[c].push_back(phrase_tokens(p));

  std::array<double, kCategoryCount> mix_cdf{};
  double mix_acc = 0.0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    mix_acc += spec.class_mix[c];
    mix_cdf[c] = mix_acc;
  }

  std::vector<Document> docs;
  docs.reserve(spec.n_documents);
  const std::size_t id_width = std::max<std::size_t>(6, std::to_string(spec.n_documents).size());

  for (std::size_t d = 0; d < spec.n_documents; ++d) {
    const double u = rng.uniform() * mix_acc;
    std::size_t category = kCategoryCount - 1;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      if (u < mix_cdf[c] && spec.class_mix[c] > 0.0) {
        category = c;
        break;
      }
    }

    const std::size_t n_sig =
        spec.min_signatures + rng.below(spec.max_signatures - spec.min_signatures + 1);
    std::vector<const std::vector<std::string>*> planted;
    std::size_t planted_tokens = 0;
    for (std::size_t s = 0; s < n_sig; ++s) {
      const auto& p = phrases[category][rng.below(phrases[category].size())];
      planted.push_back(&p);
      planted_tokens += p.size();
    }

    std::size_t length =
        spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
    const std::size_t offset =
        spec.signature_position.kind == SignaturePosition::Kind::kAfterOffset
            ? spec.signature_position.offset
            : 0;
    length = std::max(length, offset + planted_tokens + 1);
    const std::size_t filler_count = length - planted_tokens;

    std::vector<std::string> filler;
    filler.reserve(filler_count);
    for (std::size_t i = 0; i < filler_count; ++i) {
      if (rng.bernoulli(0.03))
        filler.push_back(std::to_string(1 + rng.below(640)));
      else
        filler.push_back(draw_word());
    }

    // Insertion points are filler indices; a phrase inserted at point q
    // starts after q filler words, so all phrases start at token >= offset.
    std::vector<std::size_t> points;
    for (std::size_t s = 0; s < n_sig; ++s)
      points.push_back(offset + rng.below(filler_count - offset + 1));
    std::sort(points.begin(), points.end());

    // Assemble words and mark which words may be followed by punctuation.
    std::vector<std::string_view> words;
    std::vector<bool> breakable;
    words.reserve(length);
    std::size_t next_point = 0;
    for (std::size_t i = 0; i <= filler_count; ++i) {
      while (next_point < points.size() && points[next_point] == i) {
        const auto& p = *planted[next_point];
        for (std::size_t k = 0; k < p.size(); ++k) {
          words.push_back(p[k]);
          breakable.push_back(k + 1 == p.size());
        }
        ++next_point;
      }
      if (i < filler_count) {
        words.push_back(filler[i]);
        breakable.push_back(true);
      }
    }

    std::string text;
    std::size_t sentence_len = 0;
    std::size_t sentence_target = 8 + rng.below(13);
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::string w(words[i]);
      if (sentence_len == 0 && !w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] -= 32;
      if (!text.empty()) text += ' ';
      text += w;
      ++sentence_len;
      const bool last = i + 1 == words.size();
      if (last || (breakable[i] && sentence_len >= sentence_target)) {
        text += '.';
        sentence_len = 0;
        sentence_target = 8 + rng.below(13);
      } else if (breakable[i] && rng.bernoulli(0.06)) {
        text += ',';
      }
    }

    Document doc;
    std::string num = std::to_string(d + 1);
    doc.id = "doc-" + std::string(id_width - num.size(), '0') + num;
    doc.text = std::move(text);
    doc.state = std::string(kStates[rng.below(std::size(kStates))]);
    doc.county = std::string(kCountyStems[rng.below(std::size(kCountyStems))]) + " County";
    doc.true_label = Label::from_category(category);
    doc.observed_label = doc.true_label;
    docs.push_back(std::move(doc));
  }

  std::ostringstream prov;
  prov << "generated: n=" << spec.n_documents << " seed=" << spec.seed;
  return Dataset(std::move(docs), prov.str());
}

Dataset generate_noisy_corpus(const CorpusSpec& spec) {
  Dataset clean = generate_corpus(spec);
  if (spec.noise_rate == 0.0) return clean;
  return inject_label_noise(clean, spec.noise_rate, mix_seed(spec.seed, 0x6e6f697365ULL));
}

Dataset inject_label_noise(const Dataset& dataset, double rate, std::uint64_t seed,
                           NoiseLevel level) {
  if (!(rate >= 0.0 && rate < 0.5))
    throw ValidationError("noise rate must lie in [0, 0.5)");
  Rng rng(seed);
  std::vector<Document> docs = dataset.documents();
  for (auto& doc : docs) {
    const bool flip = rng.uniform() < rate;
    if (!flip) continue;
    Label& obs = doc.observed_label;
    if (level == NoiseLevel::kBinary) {
      if (obs.binary == BinaryLabel::kOilAndGas)
        obs = Label::other();
      else
        obs = Label::oil_and_gas(static_cast<Subclass>(rng.below(kSubclassCount)));
    } else if (obs.subclass) {
      std::size_t s = rng.below(kSubclassCount - 1);
      if (s >= static_cast<std::size_t>(*obs.subclass)) ++s;
      obs.subclass = static_cast<Subclass>(s);
    }
  }
  std::ostringstream prov;
  prov << dataset.provenance() << " | noise rate=" << rate << " seed=" << seed
       << (level == NoiseLevel::kBinary ? " level=binary" : " level=subclass");
  return Dataset(std::move(docs), prov.str());
}

double noise_ceiling(double rate) {
  if (!(rate >= 0.0 && rate < 0.5))
    throw ValidationError("noise rate must lie in [0, 0.5)");
  return 1.0 - rate;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> fr = {f.train, f.val, f.test};
  double sum = 0.0;
  for (double x : fr) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw ValidationError("split fractions must be positive");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    // Guard against 0.12 * 5000 = 599.9999...
    double fl = std::floor(exact + 1e-9);
    sizes[i] = static_cast<std::size_t>(fl);
    remainder[i] = exact - fl;
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
    ++sizes[order[k]];
    ++assigned;
  }
  while (assigned > n) {  // only reachable through the floor guard
    for (std::size_t i = 3; i-- > 0;)
      if (sizes[i] > 0 && assigned > n) {
        --sizes[i];
        --assigned;
      }
  }
  return sizes;
}

DatasetSplit split(const Dataset& dataset, const SplitFractions& fractions,
                   std::uint64_t seed) {
  const auto sizes = split_sizes(dataset.size(), fractions);
  for (std::size_t i = 0; i < 3; ++i)
    if (sizes[i] == 0)
      throw ValidationError("split would produce an empty partition for " +
                            std::to_string(dataset.size()) + " documents");
  auto order = iota_indices(dataset.size());
  Rng rng(seed);
  rng.shuffle(order);
  std::array<std::vector<Document>, 3> parts;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t k = 0; k < sizes[p]; ++k) parts[p].push_back(dataset[order[pos++]]);
  const std::string base = dataset.provenance() + " | split seed=" + std::to_string(seed);
  return DatasetSplit{Dataset(std::move(parts[0]), base + " part=train"),
                      Dataset(std::move(parts[1]), base + " part=val"),
                      Dataset(std::move(parts[2]), base + " part=test")};
}

std::vector<std::size_t> observed_task_indices(const Dataset& dataset, Task task) {
  std::vector<std::size_t> out;
  for (const auto& d : dataset) {
    auto idx = task_index(d.observed_label, task);
    if (!idx) throw ValidationError("document '" + d.id + "' has no label under task " +
                                    std::string(task_name(task)));
    out.push_back(*idx);
  }
  return out;
}

Dataset filter_for_task(const Dataset& dataset, Task task) {
  if (task == Task::kBinary) return dataset;
  std::vector<Document> kept;
  for (const auto& d : dataset)
    if (d.observed_label.binary == BinaryLabel::kOilAndGas) kept.push_back(d);
  if (kept.empty())
    throw ValidationError("no Oil and Gas documents available for the multiclass task");
  return Dataset(std::move(kept), dataset.provenance() + " | task=multiclass");
}

Dataset read_jsonl(std::istream& in, const std::string& source) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": malformed JSON record: " + e.what());
    }
    if (!rec.is_object())
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": record is not a JSON object");
    try {
      Document doc;
      doc.id = required_string(rec, "id", line_no);
      doc.text = required_string(rec, "text", line_no);
      if (doc.text.empty())
        throw ValidationError("empty text (line " + std::to_string(line_no) + ")");
      doc.state = required_string(rec, "state", line_no);
      doc.county = required_string(rec, "county", line_no);
      doc.observed_label = label_from_json(rec, "label_binary", "label_subclass", line_no);
      if (rec.contains("true_label_binary"))
        doc.true_label =
            label_from_json(rec, "true_label_binary", "true_label_subclass", line_no);
      else
        doc.true_label = doc.observed_label;
      docs.push_back(std::move(doc));
    } catch (const TaxonomyError& e) {
      throw TaxonomyError(source + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source + ": " + e.what());
    }
  }
  if (docs.empty()) throw ValidationError(source + ": dataset is empty");
  return Dataset(std::move(docs), "jsonl:" + source);
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& d : dataset) {
    nlohmann::ordered_json rec;
    rec["id"] = d.id;
    rec["text"] = d.text;
    rec["state"] = d.state;
    rec["county"] = d.county;
    label_json(d.observed_label, rec, "label_binary", "label_subclass");
    label_json(d.true_label, rec, "true_label_binary", "true_label_subclass");
    out << rec.dump() << '\n';
  }
}

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_jsonl(in, path.string());
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_jsonl(dataset, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lexsort
