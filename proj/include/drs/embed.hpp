#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "drs/corpus.hpp"

namespace drs {

// Text a content model sees for one diff: fixed TITLE / TEST PLAN / CHANGES
// sections; over-long diffs lose hunk lines from the tail first.
struct ModelInput {
  std::string text;
  bool truncated = false;
};

ModelInput render_model_input(const DiffRecord& d,
                              std::size_t max_tokens = 8192);

// T x d matrix of per-token hidden states, row-major.
struct HiddenStates {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

enum class Pool { maxpool, meanpool };
Pool pool_from_name(const std::string& name);
const char* pool_name(Pool p);

// Column-wise reduction to a single d-vector. Empty input is an error.
std::vector<double> aggregate(const HiddenStates& h, Pool mode);

// Anything that turns diff text into hidden states. Implementations declare
// whether concurrent calls are safe; the pipeline serializes when not.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual HiddenStates embed(const std::string& text) const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool thread_safe() const { return false; }
};

// Reference provider: one deterministic pseudo-random vector per distinct
// token, so equal texts embed equally and a one-token edit changes exactly
// one row. Empty text yields a single zero row.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::uint64_t seed, std::size_t dim = 64);
  HiddenStates embed(const std::string& text) const override;
  std::size_t dim() const override { return dim_; }
  bool thread_safe() const override { return true; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

struct MlpConfig {
  double lr = 0.05;
  int epochs = 300;
  int batch_size = 32;
  double l2 = 0.0;
  std::uint64_t seed = 1;
};

// Internal fully-connected net with tanh hidden layers and a single logit
// output. Exposed so gradient tests can run on small shapes.
struct MlpNet {
  std::vector<std::size_t> sizes;           // {in, h1, ..., 1}
  std::vector<std::vector<double>> W;       // W[l]: sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> b;       // b[l]: sizes[l+1]

  std::size_t param_count() const;
  double* param(std::size_t flat_index);
};

MlpNet make_net(const std::vector<std::size_t>& sizes, std::uint64_t seed);
double net_logit(const MlpNet& net, const std::vector<double>& x);
double net_loss(const MlpNet& net, const std::vector<std::vector<double>>& X,
                const std::vector<int>& y, double l2);
// Gradient of net_loss in a net-shaped container.
MlpNet net_gradient(const MlpNet& net,
                    const std::vector<std::vector<double>>& X,
                    const std::vector<int>& y, double l2);

// Binary classifier over pooled embeddings; hidden widths are fixed at
// (100, 150, 50). Trained with seeded mini-batch gradient descent.
struct MlpClassifier {
  MlpNet net;
  MlpConfig train_meta;
  std::vector<double> epoch_losses;  // full-data loss, initial + per epoch
};

MlpClassifier train_mlp(const std::vector<std::vector<double>>& X,
                        const std::vector<int>& y, const MlpConfig& cfg = {});
double mlp_score(const MlpClassifier& m, const std::vector<double>& x);

nlohmann::json mlp_to_json(const MlpClassifier& m);
MlpClassifier mlp_from_json(const nlohmann::json& j);

// Everything the CLI needs to rescore diffs with an embedding classifier:
// provider identity, pooling mode, input budget, and the trained head.
struct EmbedPipelineModel {
  std::string model_id = "mlp";
  std::uint64_t embed_seed = 9;
  std::size_t embed_dim = 64;
  Pool pool = Pool::maxpool;
  std::size_t max_tokens = 8192;
  MlpClassifier clf;
};

double pipeline_score(const EmbedPipelineModel& m, const EmbeddingProvider& p,
                      const DiffRecord& d);

nlohmann::json embed_pipeline_to_json(const EmbedPipelineModel& m);
EmbedPipelineModel embed_pipeline_from_json(const nlohmann::json& j);

}  // namespace drs
