#include "drs/riskalign.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "drs/error.hpp"
#include "drs/mathfn.hpp"
#include "drs/tokenize.hpp"

namespace drs {

AnnotatedExample annotate(const ModelInput& input,
                          std::optional<bool> label) {
  if (input.text.find(kRiskMarkerOpen) != std::string::npos ||
      input.text.find(kRiskMarkerClose) != std::string::npos)
    throw UsageError("annotate: input text already contains a risk marker");
  AnnotatedExample ex;
  ex.prompt = std::string(kRiskMarkerOpen) + input.text + kRiskMarkerClose;
  if (label.has_value()) ex.label = *label ? '1' : '0';
  return ex;
}

std::vector<AnnotatedExample> build_sft_dataset(const Corpus& train,
                                                const ResampleConfig& resample,
                                                long max_tokens) {
  if (train.records.empty())
    throw UsageError("build_sft_dataset: empty training corpus");
  std::vector<char> labels;
  labels.reserve(train.records.size());
  for (const DiffRecord& d : train.records)
    labels.push_back(d.caused_sev ? 1 : 0);
  const std::vector<std::size_t> keep = resample_indices(labels, resample);
  std::vector<AnnotatedExample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) {
    const DiffRecord& d = train.records[i];
    out.push_back(annotate(render_model_input(d, max_tokens), d.caused_sev));
  }
  return out;
}

RiskScore risk_score(const NextTokenProvider& provider,
                     const ModelInput& input, bool normalized) {
  const AnnotatedExample ex = annotate(input, std::nullopt);
  const std::map<std::string, double> probs =
      provider.next_token_probs(ex.prompt);
  double sum = 0.0;
  for (const auto& [tok, p] : probs) {
    if (!(p >= 0.0))
      throw UsageError("risk_score: negative probability for token '" + tok +
                       "'");
    sum += p;
  }
  if (sum > 1.0 + 1e-6)
    throw UsageError("risk_score: token probabilities sum above 1");
  const auto p_of = [&](const char* tok) {
    auto it = probs.find(tok);
    return it == probs.end() ? 0.0 : it->second;
  };
  RiskScore r;
  r.diag.p0 = p_of("0");
  r.diag.p1 = p_of("1");
  r.diag.off_label_mass =
      std::clamp(1.0 - r.diag.p0 - r.diag.p1, 0.0, 1.0);
  const double mass = r.diag.p0 + r.diag.p1;
  if (mass == 0.0) throw UsageError("risk_score: model not aligned");
  r.score = normalized ? r.diag.p1 / mass : r.diag.p1;
  return r;
}

namespace {

// Bag-of-tokens term frequencies over a fixed vocabulary, L2-normalized.
// Tokens outside the vocabulary are ignored entirely.
std::vector<std::pair<std::size_t, double>> bag_features(
    const std::string& prompt,
    const std::unordered_map<std::string, std::size_t>& vocab_index) {
  std::unordered_map<std::size_t, double> counts;
  for (const std::string& tok : tokenize(prompt)) {
    auto it = vocab_index.find(tok);
    if (it != vocab_index.end()) counts[it->second] += 1.0;
  }
  double norm = 0.0;
  for (const auto& [idx, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(counts.size());
  for (const auto& [idx, c] : counts)
    out.emplace_back(idx, norm > 0.0 ? c / norm : 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double TokenBagAlignedModel::p1_of_prompt(const std::string& prompt) const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  double z = intercept;
  for (const auto& [idx, v] : bag_features(prompt, index))
    z += weights[idx] * v;
  return sigmoid(z);
}

std::map<std::string, double> TokenBagAlignedModel::next_token_probs(
    const std::string& prompt) const {
  const double q = p1_of_prompt(prompt);
  return {{"0", 1.0 - q}, {"1", q}};
}

double TokenBagAlignedModel::score_record(const DiffRecord& d) const {
  return risk_score(*this, render_model_input(d, max_tokens)).score;
}

TokenBagAlignedModel train_aligned_model(
    const std::vector<AnnotatedExample>& dataset, const AlignConfig& cfg,
    const std::string& model_id, long max_tokens) {
  if (dataset.empty())
    throw UsageError("train_aligned_model: empty dataset");
  if (cfg.epochs <= 0)
    throw UsageError("train_aligned_model: epochs must be positive");
  for (const AnnotatedExample& ex : dataset)
    if (!ex.label.has_value())
      throw UsageError("train_aligned_model: unlabeled example in dataset");

  TokenBagAlignedModel m;
  m.model_id = model_id;
  m.max_tokens = max_tokens;
  m.train_meta = cfg;

  std::unordered_map<std::string, std::size_t> index;
  for (const AnnotatedExample& ex : dataset)
    for (const std::string& tok : tokenize(ex.prompt))
      index.emplace(tok, 0);
  m.vocab.reserve(index.size());
  for (const auto& [tok, unused] : index) m.vocab.push_back(tok);
  std::sort(m.vocab.begin(), m.vocab.end());
  for (std::size_t i = 0; i < m.vocab.size(); ++i) index[m.vocab[i]] = i;

  const std::size_t n = dataset.size();
  const std::size_t d = m.vocab.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<int> ys;
  rows.reserve(n);
  ys.reserve(n);
  for (const AnnotatedExample& ex : dataset) {
    rows.push_back(bag_features(ex.prompt, index));
    ys.push_back(*ex.label == '1' ? 1 : 0);
  }

  m.weights.assign(d, 0.0);
  m.intercept = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> gw(d, 0.0);
  const auto loss = [&]() {
    double nll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double z = m.intercept;
      for (const auto& [idx, v] : rows[r]) z += m.weights[idx] * v;
      nll -= ys[r] ? log_sigmoid(z) : log_sigmoid(-z);
    }
    double reg = 0.0;
    for (double w : m.weights) reg += w * w;
    return nll * inv_n + 0.5 * cfg.l2 * reg;
  };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    m.epoch_losses.push_back(loss());
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double z = m.intercept;
      for (const auto& [idx, v] : rows[r]) z += m.weights[idx] * v;
      const double delta = sigmoid(z) - static_cast<double>(ys[r]);
      gb += delta;
      for (const auto& [idx, v] : rows[r]) gw[idx] += delta * v;
    }
    for (std::size_t j = 0; j < d; ++j)
      m.weights[j] -= cfg.lr * (gw[j] * inv_n + cfg.l2 * m.weights[j]);
    m.intercept -= cfg.lr * gb * inv_n;
  }
  m.epoch_losses.push_back(loss());
  return m;
}

nlohmann::json riskalign_to_json(const TokenBagAlignedModel& m) {
  nlohmann::json jw = nlohmann::json::object();
  for (std::size_t i = 0; i < m.vocab.size(); ++i)
    jw[m.vocab[i]] = m.weights[i];
  return nlohmann::json{
      {"kind", "riskalign"},
      {"version", 1},
      {"model_id", m.model_id},
      {"max_tokens", m.max_tokens},
      {"weights", std::move(jw)},
      {"intercept", m.intercept},
      {"train_meta",
       {{"lr", m.train_meta.lr},
        {"l2", m.train_meta.l2},
        {"epochs", m.train_meta.epochs}}},
  };
}

TokenBagAlignedModel riskalign_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "riskalign")
    throw UsageError("riskalign model file: expected kind \"riskalign\"");
  if (j.value("version", 0) != 1)
    throw UsageError("riskalign model file: unsupported version");
  for (const auto& [key, unused] : j.items()) {
    if (key != "kind" && key != "version" && key != "model_id" &&
        key != "max_tokens" && key != "weights" && key != "intercept" &&
        key != "train_meta")
      throw UsageError("riskalign model file: unknown key '" + key + "'");
  }
  TokenBagAlignedModel m;
  m.model_id = j.at("model_id").get<std::string>();
  m.max_tokens = j.at("max_tokens").get<long>();
  const nlohmann::json& jw = j.at("weights");
  if (!jw.is_object())
    throw UsageError("riskalign model file: weights must be an object");
  for (const auto& [tok, w] : jw.items()) {
    m.vocab.push_back(tok);
    m.weights.push_back(w.get<double>());
  }
  // nlohmann objects iterate in key order, so vocab arrives sorted.
  m.intercept = j.at("intercept").get<double>();
  const nlohmann::json& jt = j.at("train_meta");
  m.train_meta.lr = jt.at("lr").get<double>();
  m.train_meta.l2 = jt.at("l2").get<double>();
  m.train_meta.epochs = jt.at("epochs").get<int>();
  return m;
}

}  // namespace drs
