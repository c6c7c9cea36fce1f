#include "drs/embed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "drs/error.hpp"
#include "drs/mathfn.hpp"
#include "drs/rng.hpp"
#include "drs/tokenize.hpp"
#include "drs/unidiff.hpp"

namespace drs {

using nlohmann::json;

ModelInput render_model_input(const DiffRecord& d, std::size_t max_tokens) {
  std::ostringstream head;
  head << "TITLE:\n" << d.title << "\n\n";
  head << "TEST PLAN:\n" << d.test_plan << "\n\n";
  head << "CHANGES:\n";
  ModelInput mi;
  mi.text = head.str();

  std::size_t used = count_tokens(mi.text);
  const std::string diff_text = render_unidiff(d.changes);
  std::size_t pos = 0;
  while (pos < diff_text.size()) {
    std::size_t nl = diff_text.find('\n', pos);
    if (nl == std::string::npos) nl = diff_text.size() - 1;
    const std::string_view line(diff_text.data() + pos, nl - pos + 1);
    const std::size_t line_tokens = count_tokens(line);
    if (used + line_tokens > max_tokens) {
      mi.truncated = true;
      break;
    }
    mi.text.append(line);
    used += line_tokens;
    pos = nl + 1;
  }
  return mi;
}

Pool pool_from_name(const std::string& name) {
  if (name == "maxpool") return Pool::maxpool;
  if (name == "meanpool") return Pool::meanpool;
  throw UsageError("unknown pool mode '" + name +
                   "' (expected 'maxpool' or 'meanpool')");
}

const char* pool_name(Pool p) {
  return p == Pool::maxpool ? "maxpool" : "meanpool";
}

std::vector<double> aggregate(const HiddenStates& h, Pool mode) {
  if (h.rows == 0 || h.cols == 0)
    throw std::invalid_argument("aggregate: empty hidden states");
  std::vector<double> out(h.cols);
  if (mode == Pool::maxpool) {
    for (std::size_t c = 0; c < h.cols; ++c) {
      double best = h.at(0, c);
      for (std::size_t r = 1; r < h.rows; ++r)
        best = std::max(best, h.at(r, c));
      out[c] = best;
    }
  } else {
    for (std::size_t c = 0; c < h.cols; ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < h.rows; ++r) sum += h.at(r, c);
      out[c] = sum / static_cast<double>(h.rows);
    }
  }
  return out;
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::uint64_t seed, std::size_t dim)
    : seed_(seed), dim_(dim) {
  if (dim_ == 0) throw UsageError("embedding dimension must be positive");
}

HiddenStates HashingEmbedder::embed(const std::string& text) const {
  const std::vector<std::string> tokens = tokenize(text);
  HiddenStates h;
  h.cols = dim_;
  h.rows = std::max<std::size_t>(1, tokens.size());
  h.data.assign(h.rows * h.cols, 0.0);
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    const std::uint64_t base = splitmix64(fnv1a64(tokens[r]) ^ seed_);
    for (std::size_t c = 0; c < dim_; ++c) {
      const std::uint64_t bits =
          splitmix64(base + 0x9e3779b97f4a7c15ULL * (c + 1));
      h.at(r, c) =
          2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    }
  }
  return h;
}

std::size_t MlpNet::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    n += sizes[l + 1] * sizes[l] + sizes[l + 1];
  return n;
}

double* MlpNet::param(std::size_t flat_index) {
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (flat_index < W[l].size()) return &W[l][flat_index];
    flat_index -= W[l].size();
    if (flat_index < b[l].size()) return &b[l][flat_index];
    flat_index -= b[l].size();
  }
  throw std::out_of_range("MlpNet::param index");
}

MlpNet make_net(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2 || sizes.back() != 1)
    throw UsageError("net sizes must end in a single output unit");
  MlpNet net;
  net.sizes = sizes;
  Rng rng(splitmix64(seed ^ 0x4d4c50494e4954ULL));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t fan_in = sizes[l], fan_out = sizes[l + 1];
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    net.W.emplace_back(fan_out * fan_in);
    for (double& w : net.W.back()) w = rng.uniform(-r, r);
    net.b.emplace_back(fan_out, 0.0);
  }
  return net;
}

namespace {

// Forward pass keeping activations for backprop. a[0] = input,
// a[l+1] = tanh(W a + b) on hidden layers; the last layer stays linear.
double forward(const MlpNet& net, const std::vector<double>& x,
               std::vector<std::vector<double>>* acts) {
  if (x.size() != net.sizes.front())
    throw UsageError("mlp input has wrong dimension");
  std::vector<double> a = x;
  if (acts) acts->push_back(a);
  const std::size_t layers = net.W.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = net.b[l][o];
      const double* wrow = &net.W[l][o * in];
      for (std::size_t i = 0; i < in; ++i) s += wrow[i] * a[i];
      z[o] = s;
    }
    if (l + 1 < layers) {
      for (double& v : z) v = std::tanh(v);
    }
    a = std::move(z);
    if (acts) acts->push_back(a);
  }
  return a[0];
}

}  // namespace

double net_logit(const MlpNet& net, const std::vector<double>& x) {
  return forward(net, x, nullptr);
}

double net_loss(const MlpNet& net, const std::vector<std::vector<double>>& X,
                const std::vector<int>& y, double l2) {
  if (X.size() != y.size() || X.empty())
    throw UsageError("net_loss: bad dataset shape");
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = net_logit(net, X[i]);
    loss -= y[i] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  loss /= static_cast<double>(X.size());
  if (l2 > 0.0) {
    double reg = 0.0;
    for (const auto& Wl : net.W)
      for (double w : Wl) reg += w * w;
    loss += 0.5 * l2 * reg;
  }
  return loss;
}

MlpNet net_gradient(const MlpNet& net,
                    const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, double l2) {
  MlpNet g;
  g.sizes = net.sizes;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    g.W.emplace_back(net.W[l].size(), 0.0);
    g.b.emplace_back(net.b[l].size(), 0.0);
  }
  const std::size_t layers = net.W.size();
  for (std::size_t i = 0; i < X.size(); ++i) {
    std::vector<std::vector<double>> acts;
    const double z = forward(net, X[i], &acts);
    // delta on the linear output: d(mean BCE)/dz = sigmoid(z) - y.
    std::vector<double> delta{sigmoid(z) - static_cast<double>(y[i])};
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
      const std::vector<double>& a_in = acts[l];
      for (std::size_t o = 0; o < out; ++o) {
        g.b[l][o] += delta[o];
        double* grow = &g.W[l][o * in];
        for (std::size_t k = 0; k < in; ++k) grow[k] += delta[o] * a_in[k];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double* wrow = &net.W[l][o * in];
        for (std::size_t k = 0; k < in; ++k) prev[k] += wrow[k] * delta[o];
      }
      // tanh'(z) = 1 - a^2 on the hidden activation feeding layer l.
      for (std::size_t k = 0; k < in; ++k)
        prev[k] *= 1.0 - acts[l][k] * acts[l][k];
      delta = std::move(prev);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(X.size());
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t k = 0; k < g.W[l].size(); ++k)
      g.W[l][k] = g.W[l][k] * inv_n + l2 * net.W[l][k];
    for (double& v : g.b[l]) v *= inv_n;
  }
  return g;
}

MlpClassifier train_mlp(const std::vector<std::vector<double>>& X,
                        const std::vector<int>& y, const MlpConfig& cfg) {
  if (X.size() != y.size() || X.size() < 2)
    throw UsageError("train_mlp: need at least two rows");
  bool saw0 = false, saw1 = false;
  for (int v : y) (v ? saw1 : saw0) = true;
  if (!saw0 || !saw1)
    throw UsageError("train_mlp: training data contains a single class");
  const std::size_t d = X.front().size();
  for (const auto& row : X)
    if (row.size() != d) throw UsageError("train_mlp: ragged feature rows");

  MlpClassifier m;
  m.train_meta = cfg;
  m.net = make_net({d, 100, 150, 50, 1}, cfg.seed);
  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x5348554646ULL));

  m.epoch_losses.push_back(net_loss(m.net, X, y, cfg.l2));
  std::vector<std::size_t> order(X.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t bs =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.batch_size));
  for (int e = 0; e < cfg.epochs; ++e) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t stop = std::min(order.size(), start + bs);
      std::vector<std::vector<double>> bx;
      std::vector<int> by;
      bx.reserve(stop - start);
      by.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        bx.push_back(X[order[i]]);
        by.push_back(y[order[i]]);
      }
      const MlpNet g = net_gradient(m.net, bx, by, cfg.l2);
      for (std::size_t l = 0; l < m.net.W.size(); ++l) {
        for (std::size_t k = 0; k < m.net.W[l].size(); ++k)
          m.net.W[l][k] -= cfg.lr * g.W[l][k];
        for (std::size_t k = 0; k < m.net.b[l].size(); ++k)
          m.net.b[l][k] -= cfg.lr * g.b[l][k];
      }
    }
    m.epoch_losses.push_back(net_loss(m.net, X, y, cfg.l2));
  }
  return m;
}

double mlp_score(const MlpClassifier& m, const std::vector<double>& x) {
  return sigmoid(net_logit(m.net, x));
}

json mlp_to_json(const MlpClassifier& m) {
  return json{{"kind", "mlp_net"},
              {"sizes", m.net.sizes},
              {"weights", m.net.W},
              {"biases", m.net.b},
              {"train_meta",
               json{{"lr", m.train_meta.lr},
                    {"epochs", m.train_meta.epochs},
                    {"batch_size", m.train_meta.batch_size},
                    {"l2", m.train_meta.l2},
                    {"seed", m.train_meta.seed}}}};
}

namespace {

void reject_unknown_model_keys(const json& obj,
                               std::initializer_list<const char*> allowed,
                               const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw UsageError(std::string(where) + ": unknown key '" + key + "'");
  }
}

}  // namespace

MlpClassifier mlp_from_json(const json& j) {
  reject_unknown_model_keys(
      j, {"kind", "sizes", "weights", "biases", "train_meta"},
      "mlp classifier block");
  reject_unknown_model_keys(j.at("train_meta"),
                            {"lr", "epochs", "batch_size", "l2", "seed"},
                            "mlp train_meta");
  MlpClassifier m;
  m.net.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  m.net.W = j.at("weights").get<std::vector<std::vector<double>>>();
  m.net.b = j.at("biases").get<std::vector<std::vector<double>>>();
  const json& meta = j.at("train_meta");
  m.train_meta.lr = meta.at("lr").get<double>();
  m.train_meta.epochs = meta.at("epochs").get<int>();
  m.train_meta.batch_size = meta.at("batch_size").get<int>();
  m.train_meta.l2 = meta.at("l2").get<double>();
  m.train_meta.seed = meta.at("seed").get<std::uint64_t>();
  return m;
}

double pipeline_score(const EmbedPipelineModel& m, const EmbeddingProvider& p,
                      const DiffRecord& d) {
  const ModelInput mi = render_model_input(d, m.max_tokens);
  const std::vector<double> pooled = aggregate(p.embed(mi.text), m.pool);
  return mlp_score(m.clf, pooled);
}

json embed_pipeline_to_json(const EmbedPipelineModel& m) {
  return json{{"kind", "mlp"},
              {"version", 1},
              {"model_id", m.model_id},
              {"embedder",
               json{{"kind", "hashing"},
                    {"seed", m.embed_seed},
                    {"dim", m.embed_dim}}},
              {"pool", pool_name(m.pool)},
              {"max_tokens", m.max_tokens},
              {"classifier", mlp_to_json(m.clf)}};
}

EmbedPipelineModel embed_pipeline_from_json(const json& j) {
  reject_unknown_model_keys(j,
                            {"kind", "version", "model_id", "embedder",
                             "pool", "max_tokens", "classifier"},
                            "embedding model file");
  if (j.at("kind").get<std::string>() != "mlp")
    throw UsageError("model file is not an embedding classifier");
  if (j.at("version").get<int>() != 1)
    throw UsageError("unsupported embedding model version");
  EmbedPipelineModel m;
  m.model_id = j.value("model_id", "mlp");
  const json& emb = j.at("embedder");
  reject_unknown_model_keys(emb, {"kind", "seed", "dim"},
                            "embedding model embedder block");
  if (emb.at("kind").get<std::string>() != "hashing")
    throw UsageError("unknown embedder kind in model file");
  m.embed_seed = emb.at("seed").get<std::uint64_t>();
  m.embed_dim = emb.at("dim").get<std::size_t>();
  m.pool = pool_from_name(j.at("pool").get<std::string>());
  m.max_tokens = j.at("max_tokens").get<std::size_t>();
  m.clf = mlp_from_json(j.at("classifier"));
  return m;
}

}  // namespace drs
