#include "drs/embed.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "drs/error.hpp"
#include "drs/provider_client.hpp"
#include "drs/rng.hpp"
#include "drs/tokenize.hpp"
#include "test_support.hpp"

using drs::aggregate;
using drs::HashingEmbedder;
using drs::HiddenStates;
using drs::MlpConfig;
using drs::MlpNet;
using drs::ModelInput;
using drs::Pool;
using drs::render_model_input;

namespace {

HiddenStates make_hidden(std::size_t rows, std::size_t cols,
                         std::vector<double> data) {
  HiddenStates h;
  h.rows = rows;
  h.cols = cols;
  h.data = std::move(data);
  return h;
}

}  // namespace

TEST_CASE("pooling reduces columns the declared way") {
  const HiddenStates h = make_hidden(2, 2, {1.0, 4.0, 3.0, 2.0});
  CHECK(aggregate(h, Pool::maxpool) == std::vector<double>{3.0, 4.0});
  CHECK(aggregate(h, Pool::meanpool) == std::vector<double>{2.0, 3.0});

  const HiddenStates single = make_hidden(1, 3, {5.0, -1.0, 0.5});
  CHECK(aggregate(single, Pool::maxpool) ==
        std::vector<double>{5.0, -1.0, 0.5});
  CHECK(aggregate(single, Pool::meanpool) ==
        std::vector<double>{5.0, -1.0, 0.5});

  CHECK_THROWS(aggregate(HiddenStates{}, Pool::maxpool));
}

TEST_CASE("maxpool dominates meanpool elementwise") {
  drs::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(8);
    std::vector<double> data(rows * cols);
    for (double& v : data) v = rng.normal();
    const HiddenStates h = make_hidden(rows, cols, data);
    const auto mx = aggregate(h, Pool::maxpool);
    const auto mn = aggregate(h, Pool::meanpool);
    for (std::size_t c = 0; c < cols; ++c) CHECK(mx[c] >= mn[c] - 1e-15);
  }
}

TEST_CASE("pool names round trip and reject junk") {
  CHECK(drs::pool_from_name("maxpool") == Pool::maxpool);
  CHECK(drs::pool_from_name("meanpool") == Pool::meanpool);
  CHECK(std::string(drs::pool_name(Pool::maxpool)) == "maxpool");
  CHECK(std::string(drs::pool_name(Pool::meanpool)) == "meanpool");
  CHECK_THROWS_WITH_AS(drs::pool_from_name("avg"),
                       doctest::Contains("unknown pool mode"),
                       drs::UsageError);
}

TEST_CASE("model input renders fixed sections in order") {
  drs::Rng rng(22);
  drs::DiffRecord r = testgen::random_record(rng, 0, 1700000100);
  r.metadata_only = false;
  if (r.changes.empty()) r.changes = testgen::random_changes(rng);
  r.title = "Fix cache invalidation";
  r.test_plan = "ran integration suite";
  const ModelInput mi = render_model_input(r);
  CHECK(mi.text.rfind("TITLE:\nFix cache invalidation\n\n", 0) == 0);
  const std::size_t tp = mi.text.find("TEST PLAN:\nran integration suite\n\n");
  const std::size_t ch = mi.text.find("CHANGES:\n");
  REQUIRE(tp != std::string::npos);
  REQUIRE(ch != std::string::npos);
  CHECK(tp < ch);
  CHECK_FALSE(mi.truncated);
  // The diff body follows the CHANGES header.
  CHECK(mi.text.find("--- ", ch) != std::string::npos);
}

TEST_CASE("over-long inputs lose trailing diff lines first") {
  drs::DiffRecord r;
  r.id = "big";
  r.title = "massive change";
  r.test_plan = "none";
  r.closed_at = 1;
  drs::FileChange fc;
  fc.path = "big.cc";
  drs::Hunk h;
  h.old_start = 0;
  h.old_len = 0;
  h.new_start = 1;
  h.new_len = 400;
  for (int i = 0; i < 400; ++i)
    h.lines.emplace_back(drs::LineTag::add,
                         "padding_line_" + std::to_string(i) + " = 1;");
  fc.hunks.push_back(h);
  fc.file_size_after = 400;
  r.changes.push_back(fc);

  const ModelInput full = render_model_input(r, 100000);
  CHECK_FALSE(full.truncated);
  const ModelInput cut = render_model_input(r, 120);
  CHECK(cut.truncated);
  CHECK(cut.text.size() < full.text.size());
  // What survives is a strict prefix: head kept, tail dropped.
  CHECK(full.text.rfind(cut.text, 0) == 0);
  // Sections are always intact.
  CHECK(cut.text.find("TITLE:\n") != std::string::npos);
  CHECK(cut.text.find("TEST PLAN:\n") != std::string::npos);
  CHECK(cut.text.find("CHANGES:\n") != std::string::npos);
  // Token budget is respected.
  CHECK(drs::count_tokens(cut.text) <= 120);
}

TEST_CASE("hashing embedder is deterministic and token-local") {
  const HashingEmbedder e(9, 16);
  CHECK(e.dim() == 16);
  const std::string a = "guard the rollout with canary checks";
  const std::string b = "guard the rollout with canary tests";  // one edit
  const HiddenStates ha1 = e.embed(a);
  const HiddenStates ha2 = e.embed(a);
  CHECK(ha1.data == ha2.data);
  REQUIRE(ha1.cols == 16);
  REQUIRE(ha1.rows == drs::tokenize(a).size());

  const HiddenStates hb = e.embed(b);
  REQUIRE(hb.rows == ha1.rows);
  std::size_t rows_differing = 0;
  for (std::size_t r = 0; r < ha1.rows; ++r) {
    bool differs = false;
    for (std::size_t c = 0; c < ha1.cols; ++c)
      differs = differs || ha1.at(r, c) != hb.at(r, c);
    rows_differing += differs ? 1 : 0;
  }
  CHECK(rows_differing == 1);

  // Equal tokens embed equally across positions.
  const HiddenStates rep = e.embed("echo echo");
  for (std::size_t c = 0; c < rep.cols; ++c)
    CHECK(rep.at(0, c) == rep.at(1, c));

  // Different seeds give different spaces.
  const HashingEmbedder e2(10, 16);
  CHECK(e2.embed(a).data != ha1.data);

  // Empty text embeds as a single zero row.
  const HiddenStates z = e.embed("");
  CHECK(z.rows == 1);
  CHECK(z.data == std::vector<double>(16, 0.0));

  // Values stay in [-1, 1].
  for (double v : ha1.data) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("net logit matches a hand-rolled forward pass") {
  drs::Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t in = 1 + rng.below(4);
    const std::size_t hid = 1 + rng.below(5);
    MlpNet net = drs::make_net({in, hid, 1}, 1000 + trial);
    std::vector<double> x(in);
    for (double& v : x) v = rng.normal();

    // Manual: h = tanh(W0 x + b0), z = W1 h + b1.
    std::vector<double> h(hid);
    for (std::size_t o = 0; o < hid; ++o) {
      double z = net.b[0][o];
      for (std::size_t i = 0; i < in; ++i) z += net.W[0][o * in + i] * x[i];
      h[o] = std::tanh(z);
    }
    double z = net.b[1][0];
    for (std::size_t o = 0; o < hid; ++o) z += net.W[1][o] * h[o];

    CHECK(drs::net_logit(net, x) == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("net gradient matches finite differences") {
  drs::Rng rng(24);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t in = 2 + rng.below(3);
    MlpNet net = drs::make_net({in, 4, 3, 1}, 2000 + trial);
    const std::size_t n = 6;
    std::vector<std::vector<double>> X(n, std::vector<double>(in));
    std::vector<int> y(n);
    for (auto& row : X)
      for (double& v : row) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.below(2) == 1;
    const double l2 = trial % 2 ? 0.01 : 0.0;

    const MlpNet g = drs::net_gradient(net, X, y, l2);
    const double eps = 1e-6;
    // Check a scattering of parameters, not all of them.
    for (int probe = 0; probe < 25; ++probe) {
      const std::size_t idx = rng.below(net.param_count());
      MlpNet plus = net, minus = net;
      *plus.param(idx) += eps;
      *minus.param(idx) -= eps;
      const double num = (drs::net_loss(plus, X, y, l2) -
                          drs::net_loss(minus, X, y, l2)) /
                         (2 * eps);
      MlpNet gcopy = g;
      const double ana = *gcopy.param(idx);
      const double denom = std::max(1e-8, std::fabs(num) + std::fabs(ana));
      CHECK(std::fabs(num - ana) / denom < 1e-3);
    }
  }
}

TEST_CASE("the classifier learns XOR") {
  drs::Rng rng(25);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 240; ++i) {
    const double a = rng.uniform() > 0.5 ? 1.0 : 0.0;
    const double b = rng.uniform() > 0.5 ? 1.0 : 0.0;
    X.push_back({a + 0.05 * rng.normal(), b + 0.05 * rng.normal()});
    y.push_back(static_cast<int>(a) ^ static_cast<int>(b));
  }
  MlpConfig cfg;
  cfg.epochs = 220;
  cfg.lr = 0.08;
  cfg.seed = 5;
  const drs::MlpClassifier m = drs::train_mlp(X, y, cfg);
  REQUIRE(m.net.sizes == std::vector<std::size_t>{2, 100, 150, 50, 1});
  int correct = 0;
  for (std::size_t i = 0; i < X.size(); ++i)
    correct += (drs::mlp_score(m, X[i]) >= 0.5 ? 1 : 0) == y[i] ? 1 : 0;
  CHECK(static_cast<double>(correct) / static_cast<double>(X.size()) > 0.95);
  // Same config, same model.
  const drs::MlpClassifier m2 = drs::train_mlp(X, y, cfg);
  CHECK(m2.net.W == m.net.W);
  CHECK(m2.net.b == m.net.b);
}

TEST_CASE("mlp and pipeline JSON round trip") {
  drs::Rng rng(26);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    X.push_back({rng.normal(), rng.normal()});
    y.push_back(i % 2);
  }
  MlpConfig cfg;
  cfg.epochs = 3;
  drs::EmbedPipelineModel pm;
  pm.model_id = "content-risk";
  pm.embed_seed = 77;
  pm.embed_dim = 2;
  pm.pool = Pool::meanpool;
  pm.max_tokens = 512;
  pm.clf = drs::train_mlp(X, y, cfg);

  const nlohmann::json j = drs::embed_pipeline_to_json(pm);
  const drs::EmbedPipelineModel back = drs::embed_pipeline_from_json(j);
  CHECK(back.model_id == pm.model_id);
  CHECK(back.embed_seed == pm.embed_seed);
  CHECK(back.embed_dim == pm.embed_dim);
  CHECK(back.pool == pm.pool);
  CHECK(back.max_tokens == pm.max_tokens);
  CHECK(back.clf.net.sizes == pm.clf.net.sizes);
  CHECK(back.clf.net.W == pm.clf.net.W);
  CHECK(back.clf.net.b == pm.clf.net.b);
  CHECK(drs::embed_pipeline_to_json(back) == j);

  nlohmann::json bad = j;
  bad["surprise"] = true;
  CHECK_THROWS_WITH_AS(drs::embed_pipeline_from_json(bad),
                       doctest::Contains("unknown key"), drs::UsageError);

  // Scores agree before and after the round trip.
  drs::Rng rng2(27);
  drs::DiffRecord r = testgen::random_record(rng2, 1, 1700000500);
  r.metadata_only = false;
  if (r.changes.empty()) r.changes = testgen::random_changes(rng2);
  const HashingEmbedder e(pm.embed_seed, pm.embed_dim);
  CHECK(drs::pipeline_score(back, e, r) ==
        doctest::Approx(drs::pipeline_score(pm, e, r)).epsilon(1e-15));
}

TEST_CASE("external providers speak line JSON over pipes") {
  const std::string script = testgen::scratch_dir() + "/drs_mock_provider.py";
  {
    std::ofstream out(script);
    out << "import json, sys\n"
           "for line in sys.stdin:\n"
           "    req = json.loads(line)\n"
           "    op = req['op']\n"
           "    if op == 'dim':\n"
           "        print(json.dumps({'dim': 3}))\n"
           "    elif op == 'embed':\n"
           "        toks = req['text'].split()\n"
           "        hidden = [[float(len(t)), float(i), 1.0]\n"
           "                  for i, t in enumerate(toks)]\n"
           "        print(json.dumps({'hidden': hidden}))\n"
           "    elif op == 'next_token_probs':\n"
           "        prompt = req['prompt']\n"
           "        p1 = 0.9 if 'risky' in prompt else 0.1\n"
           "        print(json.dumps({'probs': {'0': round(1 - p1, 6),\n"
           "                                    '1': p1}}))\n"
           "    elif op == 'boom':\n"
           "        print(json.dumps({'error': 'synthetic failure'}))\n"
           "    sys.stdout.flush()\n";
  }

  SUBCASE("embedding provider") {
    drs::ExternalEmbeddingProvider p({"python3", script});
    CHECK(p.dim() == 3);
    const HiddenStates h = p.embed("alpha be c");
    REQUIRE(h.rows == 3);
    REQUIRE(h.cols == 3);
    CHECK(h.at(0, 0) == 5.0);  // len("alpha")
    CHECK(h.at(1, 1) == 1.0);  // position
    CHECK(h.at(2, 2) == 1.0);
    // Empty text: the provider returns no rows; we represent that as one
    // zero row so pooling stays well-defined.
    const HiddenStates z = p.embed("");
    CHECK(z.rows == 1);
    CHECK(z.data == std::vector<double>(3, 0.0));
  }

  SUBCASE("next-token provider") {
    drs::ExternalNextTokenProvider p({"python3", script});
    const auto probs = p.next_token_probs("this one is risky business");
    CHECK(probs.at("1") == doctest::Approx(0.9));
    CHECK(probs.at("0") == doctest::Approx(0.1));
  }

  SUBCASE("error replies raise") {
    drs::ProviderProcess proc({"python3", script});
    CHECK_THROWS_WITH_AS(proc.call({{"op", "boom"}}),
                         doctest::Contains("synthetic failure"),
                         std::runtime_error);
  }

  SUBCASE("a dead command is reported") {
    CHECK_THROWS_AS(
        drs::ExternalEmbeddingProvider({"/nonexistent/not-a-binary"}),
        std::runtime_error);
  }

  std::remove(script.c_str());
}
