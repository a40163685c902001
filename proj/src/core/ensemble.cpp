// Copyright 2026 The lexsort Authors
// SPDX-License-Identifier: Apache-2.0

#include "lexsort/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace lexsort {
namespace {

using Index = Eigen::Index;
constexpr char kMagic[4] = {'L', 'X', 'S', '1'};

struct Prepared {
  std::vector<TokenSequence> seqs;
  std::vector<std::size_t> labels;
};

Prepared prepare(const Dataset& data, Task task, std::size_t window) {
  Prepared p;
  p.labels = observed_task_indices(data, task);
  p.seqs.reserve(data.size());
  for (const auto& d : data) p.seqs.push_back(truncate(tokenize(d.text), window));
  return p;
}

std::vector<LabeledVector> bow_examples(const Prepared& p, const Vocab& vocab,
                                        std::size_t window) {
  std::vector<LabeledVector> out;
  out.reserve(p.seqs.size());
  for (std::size_t i = 0; i < p.seqs.size(); ++i)
    out.push_back({vectorize(p.seqs[i], vocab, window), p.labels[i]});
  return out;
}

std::vector<CnnExample> cnn_examples(const Prepared& p, const Vocab& unigrams) {
  std::vector<CnnExample> out;
  out.reserve(p.seqs.size());
  for (std::size_t i = 0; i < p.seqs.size(); ++i)
    out.push_back({token_ids(p.seqs[i], unigrams), p.labels[i]});
  return out;
}

// --- little-endian primitives ----------------------------------------------

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw CorruptionError(std::string("bundle truncated while reading ") + what);
  return to_little(v);
}

void put_matrix(std::vector<double>& buf, const Eigen::MatrixXd& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) buf.push_back(m(r, c));
}

void take_matrix(const std::vector<double>& buf, std::size_t& pos, Eigen::MatrixXd& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = buf[pos++];
}

void take_vector(const std::vector<double>& buf, std::size_t& pos, Eigen::VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) v[i] = buf[pos++];
}

nlohmann::ordered_json vocab_entries(const Vocab& v) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < v.size(); ++i) arr.push_back({v.term(i), v.doc_frequency(i)});
  return arr;
}

std::vector<std::pair<std::string, std::uint32_t>> parse_entries(const nlohmann::json& arr) {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  out.reserve(arr.size());
  for (const auto& e : arr) out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::uint32_t>());
  return out;
}

}  // namespace

EnsembleConfig EnsembleConfig::defaults(Task task) {
  EnsembleConfig c;
  c.task = task;
  c.window = task == Task::kBinary ? 800 : 1500;
  c.bow.window = c.window;
  c.cnn.window = c.window;
  return c;
}

void EnsembleConfig::validate() const {
  if (window == 0) throw ValidationError("window must be >= 1");
  if (vocab.n_min == 0 || vocab.n_min > vocab.n_max)
    throw ValidationError("n-gram orders must satisfy 1 <= n_min <= n_max");
  if (vocab.max_size == 0 || cnn_vocab_max == 0)
    throw ValidationError("vocabulary caps must be >= 1");
  bow.validate();
  cnn.validate();
  if (cnn_shape.embed_dim == 0 || cnn_shape.n_filters == 0 || cnn_shape.kernel_width == 0)
    throw ValidationError("cnn shape entries must be >= 1");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0))
    throw ValidationError("alpha must lie in [0, 1]");
}

void ModelBundle::validate() const {
  if (window == 0) throw ValidationError("bundle window must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("bundle alpha must lie in [0, 1]");
  if (bow.n_labels() != n_labels() || cnn.n_labels() != n_labels())
    throw ValidationError("branch label counts disagree with the task");
  if (bow.vocab_size() != vocab.size())
    throw ValidationError("bow input width disagrees with the vocabulary");
  if (bow.input_weight.size() != bow.w1.cols() || (bow.input_weight.array() < 0.0).any())
    throw ValidationError("bow input weights must be non-negative, one per vocabulary entry");
  if (cnn.n_tokens() != cnn_vocab.size() + 1)
    throw ValidationError("cnn embedding rows disagree with the unigram vocabulary");
}

Eigen::VectorXd combine(const Eigen::VectorXd& p_bow, const Eigen::VectorXd& p_cnn,
                        double alpha) {
  if (p_bow.size() != p_cnn.size())
    throw ValidationError("combine: distributions differ in length");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("combine: alpha outside [0, 1]");
  if (alpha == 1.0) return p_bow;
  if (alpha == 0.0) return p_cnn;
  return alpha * p_bow + (1.0 - alpha) * p_cnn;
}

PredictionResult predict_tokens(const ModelBundle& bundle, const TokenSequence& seq) {
  const TokenSequence cut = truncate(seq, bundle.window);
  PredictionResult r;
  r.bow_probabilities = bow_forward(bundle.bow, vectorize(cut, bundle.vocab, bundle.window));
  const auto ids = token_ids(cut, bundle.cnn_vocab);
  r.cnn_probabilities = cnn_forward(bundle.cnn, ids, bundle.window).probabilities;
  r.probabilities = combine(r.bow_probabilities, r.cnn_probabilities, bundle.alpha);
  r.label = argmax(r.probabilities);
  return r;
}

PredictionResult predict(const ModelBundle& bundle, std::string_view text) {
  return predict_tokens(bundle, tokenize(text));
}

double tune_alpha(const std::vector<Eigen::VectorXd>& p_bow,
                  const std::vector<Eigen::VectorXd>& p_cnn,
                  const std::vector<std::size_t>& labels, std::vector<double>* accuracy) {
  if (p_bow.size() != labels.size() || p_cnn.size() != labels.size() || labels.empty())
    throw ValidationError("tune_alpha: inconsistent inputs");
  double best_alpha = 0.0;
  double best_acc = -1.0;
  if (accuracy) accuracy->clear();
  for (int step = 0; step <= 10; ++step) {
    const double alpha = step / 10.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (argmax(combine(p_bow[i], p_cnn[i], alpha)) == labels[i]) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(labels.size());
    if (accuracy) accuracy->push_back(acc);
    if (acc >= best_acc) {
      best_acc = acc;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

EnsembleTrainResult train_ensemble(const Dataset& train_in, const Dataset& val_in,
                                   const EnsembleConfig& config_in) {
  EnsembleConfig config = config_in;
  config.bow.window = config.window;
  config.cnn.window = config.window;
  config.validate();
  const Dataset train = filter_for_task(train_in, config.task);
  const Dataset val = filter_for_task(val_in, config.task);
  const std::size_t n_labels = task_label_count(config.task);

  const Prepared tr = prepare(train, config.task, config.window);
  const Prepared va = prepare(val, config.task, config.window);

  EnsembleTrainResult result;
  ModelBundle& b = result.bundle;
  b.task = config.task;
  b.window = config.window;
  b.vocab = build_vocab(tr.seqs, config.vocab);
  b.cnn_vocab = build_vocab(
      tr.seqs, VocabParams{1, 1, config.vocab.min_doc_freq, config.cnn_vocab_max});

  const auto bow_tr = bow_examples(tr, b.vocab, config.window);
  const auto bow_va = bow_examples(va, b.vocab, config.window);
  BowNet bow_start = bow_init(b.vocab.size(), config.bow.hidden_size, n_labels, config.bow.seed);
  bow_start.input_weight = idf_weights(b.vocab, tr.seqs.size());
  auto bow = bow_train(std::move(bow_start), bow_tr, bow_va, config.bow);
  b.bow = std::move(bow.net);
  result.bow_history = std::move(bow.history);

  const auto cnn_tr = cnn_examples(tr, b.cnn_vocab);
  const auto cnn_va = cnn_examples(va, b.cnn_vocab);
  auto cnn = cnn_train(cnn_init(b.cnn_vocab.size(), n_labels, config.cnn_shape,
                                mix_seed(config.cnn.seed, 0x636e6eULL)),
                       cnn_tr, cnn_va, config.cnn);
  b.cnn = std::move(cnn.model);
  result.cnn_history = std::move(cnn.history);

  std::vector<Eigen::VectorXd> p_bow, p_cnn;
  for (std::size_t i = 0; i < va.seqs.size(); ++i) {
    p_bow.push_back(bow_forward(b.bow, bow_va[i].x));
    p_cnn.push_back(cnn_forward(b.cnn, cnn_va[i].ids, config.window).probabilities);
  }
  const double tuned = tune_alpha(p_bow, p_cnn, va.labels, &result.alpha_accuracy);
  b.alpha = config.alpha.value_or(tuned);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < va.labels.size(); ++i)
    if (argmax(combine(p_bow[i], p_cnn[i], b.alpha)) == va.labels[i]) ++correct;
  result.val_accuracy = static_cast<double>(correct) / static_cast<double>(va.labels.size());
  return result;
}

double bundle_accuracy(const ModelBundle& bundle, const Dataset& data_in) {
  const Dataset data = filter_for_task(data_in, bundle.task);
  const auto labels = observed_task_indices(data, bundle.task);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predict(bundle, data[i].text).label == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void write_bundle(const ModelBundle& b, std::ostream& out) {
  b.validate();
  nlohmann::ordered_json header;
  header["task"] = std::string(task_name(b.task));
  header["window"] = b.window;
  header["alpha"] = b.alpha;
  header["ngram_min"] = b.vocab.n_min();
  header["ngram_max"] = b.vocab.n_max();
  header["min_doc_freq"] = b.vocab.min_doc_freq();
  header["cnn_min_doc_freq"] = b.cnn_vocab.min_doc_freq();
  header["dims"] = {{"vocab", b.vocab.size()},
                    {"hidden", b.bow.hidden_size()},
                    {"labels", b.n_labels()},
                    {"cnn_tokens", b.cnn_vocab.size()},
                    {"embed_dim", b.cnn.embed_dim()},
                    {"n_filters", b.cnn.n_filters()},
                    {"kernel_width", b.cnn.kernel_width}};
  header["vocab"] = vocab_entries(b.vocab);
  header["cnn_vocab"] = vocab_entries(b.cnn_vocab);
  const std::string text = header.dump();

  std::vector<double> params;
  put_matrix(params, b.bow.w1);
  put_matrix(params, b.bow.b1);
  put_matrix(params, b.bow.w2);
  put_matrix(params, b.bow.b2);
  put_matrix(params, b.bow.input_weight);
  put_matrix(params, b.cnn.embedding);
  put_matrix(params, b.cnn.filters);
  put_matrix(params, b.cnn.attention);
  put_matrix(params, b.cnn.out_w);
  put_matrix(params, b.cnn.out_b);

  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, b.format_version);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(out, params.size());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
  } else {
    for (double v : params) put<double>(out, v);
  }
}

ModelBundle read_bundle(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptionError("not a model bundle (bad magic bytes)");
  const auto version = get<std::uint32_t>(in, "format version");
  if (version != kBundleFormatVersion)
    throw UnsupportedVersionError("unsupported bundle format version " + std::to_string(version) +
                                  " (this build reads version " +
                                  std::to_string(kBundleFormatVersion) + ")");
  const auto header_len = get<std::uint64_t>(in, "header length");
  if (header_len > (std::uint64_t{1} << 34)) throw CorruptionError("implausible header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (static_cast<std::uint64_t>(in.gcount()) != header_len)
    throw CorruptionError("bundle truncated inside the header");

  ModelBundle b;
  b.format_version = version;
  std::size_t n_params = 0;
  try {
    const auto h = nlohmann::json::parse(text);
    b.task = parse_task(h.at("task").get<std::string>());
    b.window = h.at("window").get<std::size_t>();
    b.alpha = h.at("alpha").get<double>();
    b.vocab = Vocab(h.at("ngram_min").get<std::size_t>(), h.at("ngram_max").get<std::size_t>(),
                    h.at("min_doc_freq").get<std::size_t>(), parse_entries(h.at("vocab")));
    b.cnn_vocab = Vocab(1, 1, h.at("cnn_min_doc_freq").get<std::size_t>(),
                        parse_entries(h.at("cnn_vocab")));
    const auto& d = h.at("dims");
    const auto v = d.at("vocab").get<std::size_t>();
    const auto hid = d.at("hidden").get<std::size_t>();
    const auto l = d.at("labels").get<std::size_t>();
    const auto t = d.at("cnn_tokens").get<std::size_t>();
    CnnShape shape{d.at("embed_dim").get<std::size_t>(), d.at("n_filters").get<std::size_t>(),
                   d.at("kernel_width").get<std::size_t>()};
    if (v != b.vocab.size() || t != b.cnn_vocab.size() || l != task_label_count(b.task))
      throw CorruptionError("bundle header dimensions disagree with its vocabulary");
    if (hid == 0 || shape.embed_dim == 0 || shape.n_filters == 0 || shape.kernel_width == 0 ||
        hid > (1u << 20) || shape.embed_dim > (1u << 16) || shape.n_filters > (1u << 16) ||
        shape.kernel_width > (1u << 12))
      throw CorruptionError("bundle header has invalid dimensions");
    b.bow = bow_zero(v, hid, l);
    b.cnn = cnn_zero(t, l, shape);
    n_params = hid * v + hid + l * hid + l + v + (t + 1) * shape.embed_dim +
               shape.n_filters * shape.kernel_width * shape.embed_dim + shape.n_filters +
               l * shape.n_filters + l;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("bundle header is malformed: ") + e.what());
  } catch (const ValidationError& e) {
    throw CorruptionError(std::string("bundle header is invalid: ") + e.what());
  }

  const auto count = get<std::uint64_t>(in, "parameter count");
  if (count != n_params)
    throw CorruptionError("bundle parameter count " + std::to_string(count) +
                          " does not match header dimensions (" + std::to_string(n_params) + ")");
  std::vector<double> params(n_params);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n_params * sizeof(double))
    throw CorruptionError("bundle truncated inside the parameter payload");
  if constexpr (std::endian::native == std::endian::big)
    for (double& x : params) x = to_little(x);
  if (in.peek() != std::char_traits<char>::eof())
    throw CorruptionError("trailing bytes after the parameter payload");

  std::size_t pos = 0;
  take_matrix(params, pos, b.bow.w1);
  take_vector(params, pos, b.bow.b1);
  take_matrix(params, pos, b.bow.w2);
  take_vector(params, pos, b.bow.b2);
  take_vector(params, pos, b.bow.input_weight);
  take_matrix(params, pos, b.cnn.embedding);
  take_matrix(params, pos, b.cnn.filters);
  take_vector(params, pos, b.cnn.attention);
  take_matrix(params, pos, b.cnn.out_w);
  take_vector(params, pos, b.cnn.out_b);
  try {
    b.validate();
  } catch (const ValidationError& e) {
    throw CorruptionError(std::string("bundle contents are inconsistent: ") + e.what());
  }
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_bundle(bundle, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_bundle(in);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kCorruption) throw CorruptionError(path.string() + ": " + e.what());
    if (e.kind() == ErrorKind::kUnsupportedVersion)
      throw UnsupportedVersionError(path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace lexsort
