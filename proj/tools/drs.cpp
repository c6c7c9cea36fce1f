#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drs/config.hpp"
#include "drs/corpus.hpp"
#include "drs/embed.hpp"
#include "drs/error.hpp"
#include "drs/eval.hpp"
#include "drs/features.hpp"
#include "drs/gating.hpp"
#include "drs/gitmine.hpp"
#include "drs/logreg.hpp"
#include "drs/provider_client.hpp"
#include "drs/riskalign.hpp"
#include "drs/synthetic.hpp"

namespace {

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drs::UsageError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw drs::UsageError("'" + path + "': " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw drs::UsageError("cannot write '" + path + "'");
  out << text;
}

std::string format_score(double s) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", s);
  return buf;
}

// "id,score" per line; a leading header row is tolerated.
std::map<std::string, double> read_score_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drs::UsageError("cannot open scores file '" + path + "'");
  std::map<std::string, double> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw drs::UsageError("scores file '" + path + "', line " +
                            std::to_string(lineno) + ": expected 'id,score'");
    const std::string id = line.substr(0, comma);
    const std::string val = line.substr(comma + 1);
    if (lineno == 1 && id == "id") continue;
    try {
      out[id] = std::stod(val);
    } catch (const std::exception&) {
      throw drs::UsageError("scores file '" + path + "', line " +
                            std::to_string(lineno) + ": bad score '" + val +
                            "'");
    }
  }
  return out;
}

std::vector<std::size_t> scorable_indices(const drs::Corpus& c,
                                          const std::string& what) {
  std::vector<std::size_t> idx;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    if (c.records[i].metadata_only)
      ++skipped;
    else
      idx.push_back(i);
  }
  if (skipped > 0)
    std::cerr << "warning: skipping " << skipped
              << " metadata-only record(s) in " << what
              << " (no file changes to score)\n";
  return idx;
}

struct LoadedModel {
  std::string kind;
  drs::LogisticModel logreg;
  drs::EmbedPipelineModel mlp;
  drs::TokenBagAlignedModel riskalign;

  const std::string& id() const {
    if (kind == "logreg") return logreg.model_id;
    if (kind == "mlp") return mlp.model_id;
    return riskalign.model_id;
  }
};

LoadedModel load_model(const std::string& path) {
  const nlohmann::json j = read_json_file(path);
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw drs::UsageError("'" + path + "': not a model file (missing kind)");
  LoadedModel m;
  m.kind = j["kind"].get<std::string>();
  if (m.kind == "logreg")
    m.logreg = drs::logreg_from_json(j);
  else if (m.kind == "mlp")
    m.mlp = drs::embed_pipeline_from_json(j);
  else if (m.kind == "riskalign")
    m.riskalign = drs::riskalign_from_json(j);
  else
    throw drs::UsageError("'" + path + "': unknown model kind '" + m.kind +
                          "'");
  return m;
}

// Feature rows for the given corpus positions (which must be scorable),
// with the llm_score column appended when the model expects one.
std::vector<std::vector<double>> feature_rows_for(
    const LoadedModel& m, const drs::Corpus& c,
    const std::vector<std::size_t>& idx, const drs::Config& cfg,
    const std::map<std::string, double>& llm) {
  const drs::ExtractedFeatures ex = drs::extract_scorable(c, cfg.features);
  std::unordered_map<std::size_t, std::size_t> row_of;
  row_of.reserve(ex.indices.size());
  for (std::size_t i = 0; i < ex.indices.size(); ++i)
    row_of[ex.indices[i]] = i;
  std::vector<std::vector<double>> rows;
  rows.reserve(idx.size());
  for (std::size_t pos : idx) {
    auto it = row_of.find(pos);
    if (it == row_of.end())
      throw std::logic_error("internal: metadata-only record in score set");
    std::vector<double> x = ex.rows[it->second].values;
    if (m.logreg.llm_score_mean.has_value()) {
      auto ls = llm.find(c.records[pos].id);
      if (ls != llm.end()) x.push_back(ls->second);
      // else leave short: the trailing llm_score is imputed at score time
    } else if (!llm.empty()) {
      throw drs::UsageError(
          "--llm-scores given, but the model has no llm_score feature");
    }
    rows.push_back(std::move(x));
  }
  return rows;
}

std::vector<double> scores_for(const LoadedModel& m, const drs::Corpus& c,
                               const std::vector<std::size_t>& idx,
                               const drs::Config& cfg,
                               const std::map<std::string, double>& llm) {
  std::vector<double> out;
  out.reserve(idx.size());
  if (m.kind == "logreg") {
    for (const std::vector<double>& x : feature_rows_for(m, c, idx, cfg, llm))
      out.push_back(drs::logreg_score(m.logreg, x));
  } else if (m.kind == "mlp") {
    std::unique_ptr<drs::EmbeddingProvider> provider;
    if (!cfg.embed.provider.empty()) {
      provider =
          std::make_unique<drs::ExternalEmbeddingProvider>(cfg.embed.provider);
      if (provider->dim() != m.mlp.embed_dim)
        throw drs::UsageError(
            "external embedding provider dim does not match the model");
    } else {
      provider = std::make_unique<drs::HashingEmbedder>(m.mlp.embed_seed,
                                                        m.mlp.embed_dim);
    }
    for (std::size_t pos : idx)
      out.push_back(drs::pipeline_score(m.mlp, *provider, c.records[pos]));
  } else {
    if (!cfg.next_token_provider.empty()) {
      drs::ExternalNextTokenProvider provider(cfg.next_token_provider);
      for (std::size_t pos : idx)
        out.push_back(
            drs::risk_score(provider,
                            drs::render_model_input(
                                c.records[pos],
                                static_cast<std::size_t>(
                                    m.riskalign.max_tokens)))
                .score);
    } else {
      for (std::size_t pos : idx)
        out.push_back(m.riskalign.score_record(c.records[pos]));
    }
  }
  return out;
}

drs::SplitSpec split_from(const drs::Config& cfg, std::int64_t train_end,
                          std::int64_t val_end, std::int64_t test_end) {
  const bool any = train_end != 0 || val_end != 0 || test_end != 0;
  if (!any) return drs::require_split(cfg);
  if (train_end == 0 || val_end == 0 || test_end == 0)
    throw drs::UsageError(
        "give all of --train-end/--val-end/--test-end or none");
  drs::SplitSpec s;
  s.train_end = train_end;
  s.val_end = val_end;
  s.test_end = test_end;
  if (!(s.train_end < s.val_end && s.val_end < s.test_end))
    throw drs::UsageError(
        "split boundaries must satisfy train_end < val_end < test_end");
  return s;
}

std::vector<std::size_t> intersect_sorted(const std::vector<std::size_t>& a,
                                          const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

nlohmann::json decision_to_json(const drs::GateDecision& d) {
  nlohmann::json j{{"diff_id", d.diff_id}, {"zone", d.zone},
                   {"g", d.g},             {"score", d.score},
                   {"decision", d.gated ? "gate" : "allow"}};
  if (std::isinf(d.cutoff))
    j["cutoff"] = nullptr;
  else
    j["cutoff"] = d.cutoff;
  if (!d.reasons.empty()) {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& [feature, contribution] : d.reasons)
      rs.push_back({{"feature", feature}, {"contribution", contribution}});
    j["reasons"] = std::move(rs);
  }
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

struct IngestArgs {
  std::string out, config_path, jsonl_in, git_repo, labels;
  bool synthetic = false;
  drs::SyntheticConfig syn;
};

void run_ingest(const IngestArgs& a) {
  const int sources = (a.synthetic ? 1 : 0) + (a.jsonl_in.empty() ? 0 : 1) +
                      (a.git_repo.empty() ? 0 : 1);
  if (sources != 1)
    throw drs::UsageError(
        "ingest needs exactly one of --synthetic, --jsonl, --git");
  if (!a.labels.empty() && a.git_repo.empty())
    throw drs::UsageError("--labels applies only to --git");
  drs::Corpus c;
  if (a.synthetic) {
    c = drs::generate_synthetic(a.syn);
  } else if (!a.jsonl_in.empty()) {
    c = drs::load_jsonl(a.jsonl_in);
  } else {
    const drs::Config cfg = a.config_path.empty()
                                ? drs::default_config()
                                : drs::load_config(a.config_path);
    c = drs::mine_git(a.git_repo, a.labels, cfg);
  }
  drs::save_jsonl(c, a.out);
  std::cout << "wrote " << c.records.size() << " records to " << a.out
            << "\n";
}

struct TrainArgs {
  std::string corpus, model, out, config_path, llm_scores;
  std::int64_t train_end = 0, val_end = 0, test_end = 0;
};

void run_train(const TrainArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const drs::Corpus c = drs::load_jsonl(a.corpus);
  const drs::SplitSpec spec =
      split_from(cfg, a.train_end, a.val_end, a.test_end);
  const drs::ChronoSplit split = drs::chronological_split(c, spec);
  const std::vector<std::size_t> scorable = scorable_indices(c, "corpus");
  const std::vector<std::size_t> train_idx =
      intersect_sorted(split.train, scorable);
  if (train_idx.empty())
    throw drs::UsageError("training window contains no scorable records");

  std::vector<char> labels;
  labels.reserve(train_idx.size());
  std::size_t pos_count = 0;
  for (std::size_t i : train_idx) {
    labels.push_back(c.records[i].caused_sev ? 1 : 0);
    if (c.records[i].caused_sev) ++pos_count;
  }
  std::cout << "class balance before resample: " << pos_count
            << " positive / " << (train_idx.size() - pos_count)
            << " negative\n";
  const std::vector<std::size_t> keep =
      drs::resample_indices(labels, cfg.resample);
  std::vector<std::size_t> kept_idx;
  std::size_t kept_pos = 0;
  for (std::size_t k : keep) {
    kept_idx.push_back(train_idx[k]);
    if (labels[k]) ++kept_pos;
  }
  std::cout << "class balance after resample:  " << kept_pos
            << " positive / " << (kept_idx.size() - kept_pos)
            << " negative\n";

  const std::string model_id = stem_of(a.out);
  nlohmann::json out_json;
  if (a.model == "logreg") {
    std::map<std::string, double> llm;
    if (!a.llm_scores.empty()) llm = read_score_csv(a.llm_scores);
    const drs::ExtractedFeatures ex = drs::extract_scorable(c, cfg.features);
    std::unordered_map<std::size_t, std::size_t> row_of;
    for (std::size_t i = 0; i < ex.indices.size(); ++i)
      row_of[ex.indices[i]] = i;
    std::vector<std::string> names = drs::feature_names(cfg.features);
    if (!llm.empty()) names.push_back(drs::kLlmScoreFeature);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (std::size_t i : kept_idx) {
      std::vector<double> x = ex.rows[row_of.at(i)].values;
      if (!llm.empty()) {
        auto it = llm.find(c.records[i].id);
        if (it == llm.end())
          throw drs::UsageError("no llm score for training record '" +
                                c.records[i].id + "'");
        x.push_back(it->second);
      }
      X.push_back(std::move(x));
      y.push_back(c.records[i].caused_sev ? 1 : 0);
    }
    drs::LogisticModel m = drs::train_logreg(X, y, names, cfg.logreg);
    m.model_id = model_id;
    out_json = drs::logreg_to_json(m);
  } else if (a.model == "mlp") {
    std::unique_ptr<drs::EmbeddingProvider> provider;
    if (!cfg.embed.provider.empty())
      provider =
          std::make_unique<drs::ExternalEmbeddingProvider>(cfg.embed.provider);
    else
      provider = std::make_unique<drs::HashingEmbedder>(cfg.embed.seed,
                                                        cfg.embed.dim);
    const drs::Pool pool = drs::pool_from_name(cfg.embed.pool);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (std::size_t i : kept_idx) {
      const drs::ModelInput input = drs::render_model_input(
          c.records[i], static_cast<std::size_t>(cfg.embed.max_tokens));
      X.push_back(drs::aggregate(provider->embed(input.text), pool));
      y.push_back(c.records[i].caused_sev ? 1 : 0);
    }
    drs::EmbedPipelineModel m;
    m.model_id = model_id;
    m.embed_seed = cfg.embed.seed;
    m.embed_dim = provider->dim();
    m.pool = pool;
    m.max_tokens = static_cast<std::size_t>(cfg.embed.max_tokens);
    m.clf = drs::train_mlp(X, y, cfg.mlp);
    out_json = drs::embed_pipeline_to_json(m);
  } else if (a.model == "riskalign") {
    drs::Corpus slice;
    slice.provenance = c.provenance;
    for (std::size_t i : train_idx) slice.records.push_back(c.records[i]);
    const std::vector<drs::AnnotatedExample> dataset =
        drs::build_sft_dataset(slice, cfg.resample, cfg.embed.max_tokens);
    const drs::TokenBagAlignedModel m = drs::train_aligned_model(
        dataset, cfg.riskalign, model_id, cfg.embed.max_tokens);
    out_json = drs::riskalign_to_json(m);
  } else {
    throw drs::UsageError("--model must be logreg, mlp, or riskalign");
  }
  write_text_file(a.out, out_json.dump(2) + "\n");
  std::cout << "wrote model " << model_id << " to " << a.out << "\n";
}

struct ScoreArgs {
  std::string corpus, model, out, config_path, llm_scores;
};

void run_score(const ScoreArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const drs::Corpus c = drs::load_jsonl(a.corpus);
  const LoadedModel m = load_model(a.model);
  std::map<std::string, double> llm;
  if (!a.llm_scores.empty()) llm = read_score_csv(a.llm_scores);
  const std::vector<std::size_t> idx = scorable_indices(c, "corpus");
  const std::vector<double> scores = scores_for(m, c, idx, cfg, llm);
  std::string csv = "id,score\n";
  for (std::size_t i = 0; i < idx.size(); ++i)
    csv += c.records[idx[i]].id + "," + format_score(scores[i]) + "\n";
  write_text_file(a.out, csv);
  std::cout << "scored " << idx.size() << " diffs with " << m.id() << " to "
            << a.out << "\n";
}

struct GateArgs {
  std::string corpus, calibration_corpus, model, zone, out, config_path,
      llm_scores;
  bool print_reports = false;
};

void run_gate(const GateArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const drs::Corpus c = drs::load_jsonl(a.corpus);
  const LoadedModel m = load_model(a.model);
  std::map<std::string, double> llm;
  if (!a.llm_scores.empty()) llm = read_score_csv(a.llm_scores);

  const std::string cal_path =
      a.calibration_corpus.empty() ? a.corpus : a.calibration_corpus;
  const drs::Corpus cal =
      cal_path == a.corpus ? c : drs::load_jsonl(cal_path);
  const std::vector<std::size_t> cal_idx =
      scorable_indices(cal, "calibration corpus");
  if (cal_idx.empty())
    throw drs::UsageError("calibration corpus has no scorable records");
  const std::vector<double> cal_scores = scores_for(m, cal, cal_idx, cfg, llm);
  const std::string window_id =
      stem_of(cal_path) + ":" + std::to_string(cal_idx.size());
  const drs::ZoneThresholds t =
      drs::calibrate(cal_scores, cfg.policy, window_id, m.id());

  const std::vector<std::size_t> idx = scorable_indices(c, "corpus");
  const std::vector<double> scores = scores_for(m, c, idx, cfg, llm);
  std::vector<std::vector<double>> rows;
  if (m.kind == "logreg") rows = feature_rows_for(m, c, idx, cfg, llm);

  std::string out_jsonl;
  std::size_t gated = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::vector<std::pair<std::string, double>> reasons;
    std::string note;
    if (m.kind == "logreg")
      reasons = drs::explain(m.logreg, rows[i], 3);
    else
      note = "content model score (" + m.kind + ")";
    const drs::GateDecision d = drs::decide(
        c.records[idx[i]].id, scores[i], a.zone, t, reasons, note);
    if (d.gated) ++gated;
    out_jsonl += decision_to_json(d).dump() + "\n";
    if (a.print_reports) std::cout << drs::render_report(d) << "\n";
  }
  write_text_file(a.out, out_jsonl);
  const drs::ZoneCutoff& zc = t.zone(a.zone);
  std::cout << "gated " << gated << " of " << idx.size() << " diffs in zone "
            << a.zone << " (cutoff "
            << (std::isinf(zc.cutoff) ? std::string("none")
                                      : format_score(zc.cutoff))
            << ")\n";
}

struct EvaluateArgs {
  std::string corpus, config_path, baseline = "random", out, curve,
      llm_scores;
  std::vector<std::string> models;
  std::int64_t train_end = 0, val_end = 0, test_end = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const drs::Corpus c = drs::load_jsonl(a.corpus);
  const drs::SplitSpec spec =
      split_from(cfg, a.train_end, a.val_end, a.test_end);
  const drs::ChronoSplit split = drs::chronological_split(c, spec);
  const std::vector<std::size_t> scorable = scorable_indices(c, "corpus");
  const std::vector<std::size_t> test_idx =
      intersect_sorted(split.test, scorable);
  if (test_idx.empty())
    throw drs::UsageError("test window contains no scorable records");
  std::map<std::string, double> llm;
  if (!a.llm_scores.empty()) llm = read_score_csv(a.llm_scores);

  std::vector<std::pair<std::string, std::vector<drs::ScoredDiff>>> scored;
  for (const std::string& path : a.models) {
    const LoadedModel m = load_model(path);
    for (const auto& [id, unused] : scored)
      if (id == m.id())
        throw drs::UsageError("duplicate model id '" + m.id() + "'");
    const std::vector<double> s = scores_for(m, c, test_idx, cfg, llm);
    std::vector<drs::ScoredDiff> sd;
    sd.reserve(test_idx.size());
    for (std::size_t i = 0; i < test_idx.size(); ++i)
      sd.push_back({c.records[test_idx[i]].id, s[i],
                    c.records[test_idx[i]].caused_sev});
    scored.emplace_back(m.id(), std::move(sd));
  }

  const std::string baseline =
      a.baseline.empty() ? cfg.baseline.model : a.baseline;
  drs::EvalReport r;
  bool is_model_baseline = false;
  for (const auto& [id, unused] : scored)
    if (id == baseline) is_model_baseline = true;
  if (is_model_baseline) {
    r = drs::evaluate_models(scored, baseline, cfg.policy);
  } else if (baseline == "random") {
    r = drs::evaluate_models(scored, scored.front().first, cfg.policy);
    r.baseline = "random";
    std::vector<char> labels;
    labels.reserve(test_idx.size());
    for (std::size_t i : test_idx)
      labels.push_back(c.records[i].caused_sev ? 1 : 0);
    std::vector<drs::EvalCell> random_row;
    for (std::size_t z = 0; z < r.zones.size(); ++z) {
      const double base = drs::random_gate_baseline(
          labels, r.zone_g[z], cfg.baseline.trials, cfg.baseline.seed);
      for (std::size_t i = 0; i < r.models.size(); ++i)
        r.cells[i][z].ratio =
            drs::capture_ratio(r.cells[i][z].capture_pct, base);
      drs::EvalCell cell;
      cell.capture_pct = base;
      cell.ratio = 1.0;
      cell.gated = static_cast<std::size_t>(std::ceil(
          r.zone_g[z] * static_cast<double>(test_idx.size()) - 1e-9));
      cell.sevs_captured = static_cast<std::size_t>(
          std::llround(base * static_cast<double>(r.sevs) / 100.0));
      random_row.push_back(cell);
    }
    r.models.push_back("random");
    r.cells.push_back(std::move(random_row));
  } else {
    throw drs::UsageError(
        "--baseline must be 'random' or one of the model ids");
  }

  std::cout << drs::eval_table(r);
  if (!a.out.empty()) write_text_file(a.out, drs::eval_csv(r));
  if (!a.curve.empty())
    write_text_file(a.curve, drs::capture_curve_csv(scored));
}

struct ReportArgs {
  std::string corpus, calibration_corpus, model, id, zone, config_path,
      llm_scores;
};

void run_report(const ReportArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const drs::Corpus c = drs::load_jsonl(a.corpus);
  const LoadedModel m = load_model(a.model);
  std::map<std::string, double> llm;
  if (!a.llm_scores.empty()) llm = read_score_csv(a.llm_scores);

  const std::string cal_path =
      a.calibration_corpus.empty() ? a.corpus : a.calibration_corpus;
  const drs::Corpus cal =
      cal_path == a.corpus ? c : drs::load_jsonl(cal_path);
  const std::vector<std::size_t> cal_idx =
      scorable_indices(cal, "calibration corpus");
  if (cal_idx.empty())
    throw drs::UsageError("calibration corpus has no scorable records");
  const std::vector<double> cal_scores = scores_for(m, cal, cal_idx, cfg, llm);
  const drs::ZoneThresholds t = drs::calibrate(
      cal_scores, cfg.policy,
      stem_of(cal_path) + ":" + std::to_string(cal_idx.size()), m.id());

  std::optional<std::size_t> pos;
  for (std::size_t i = 0; i < c.records.size(); ++i)
    if (c.records[i].id == a.id) pos = i;
  if (!pos.has_value())
    throw drs::UsageError("diff '" + a.id + "' not found in the corpus");
  if (c.records[*pos].metadata_only)
    throw drs::UsageError("diff '" + a.id +
                          "' is metadata-only (no file changes to score)");
  const std::vector<std::size_t> one{*pos};
  const double score = scores_for(m, c, one, cfg, llm)[0];
  std::vector<std::pair<std::string, double>> reasons;
  std::string note;
  if (m.kind == "logreg")
    reasons = drs::explain(m.logreg, feature_rows_for(m, c, one, cfg, llm)[0],
                           3);
  else
    note = "content model score (" + m.kind + ")";
  std::cout << drs::render_report(
      drs::decide(a.id, score, a.zone, t, reasons, note));
}

struct EscalateArgs {
  std::string log, id, reason, justification, approver,
      outcome = "approved", config_path;
};

void run_escalate(const EscalateArgs& a) {
  const drs::Config cfg = a.config_path.empty()
                              ? drs::default_config()
                              : drs::load_config(a.config_path);
  const std::string path = a.log.empty() ? cfg.escalation.log : a.log;
  drs::EscalationRecord rec;
  rec.diff_id = a.id;
  rec.reason_code = a.reason;
  rec.justification = a.justification;
  rec.approver = a.approver;
  rec.outcome = a.outcome;
  drs::record_escalation(rec, path, cfg.escalation.reasons);
  std::cout << "escalation recorded for " << a.id << " (" << a.reason
            << ", " << a.outcome << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diff risk scoring and release gating toolkit"};
  app.require_subcommand(1);

  IngestArgs ing;
  CLI::App* c_ing = app.add_subcommand(
      "ingest", "Build or normalize a corpus file (JSONL)");
  c_ing->add_option("--out", ing.out, "output corpus path")->required();
  c_ing->add_option("--config", ing.config_path, "config file");
  c_ing->add_flag("--synthetic", ing.synthetic, "generate a seeded corpus");
  c_ing->add_option("--jsonl", ing.jsonl_in, "normalize an existing corpus");
  c_ing->add_option("--git", ing.git_repo, "mine a git checkout");
  c_ing->add_option("--labels", ing.labels, "incident labels for --git");
  c_ing->add_option("--seed", ing.syn.seed, "generator seed");
  c_ing->add_option("--n", ing.syn.n, "number of records");
  c_ing->add_option("--sev-rate", ing.syn.sev_rate, "mean incident rate");
  c_ing->add_option("--signal", ing.syn.signal_strength, "signal strength");
  c_ing->add_option("--authors", ing.syn.n_authors, "author pool size");
  c_ing->add_option("--files", ing.syn.n_files, "file pool size");
  c_ing->add_option("--start", ing.syn.start_ts, "first timestamp");
  c_ing->add_option("--end", ing.syn.end_ts, "last timestamp bound");
  c_ing->add_option("--org", ing.syn.org, "org label");

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "Train a risk model");
  c_tr->add_option("--corpus", tr.corpus, "corpus file")->required();
  c_tr->add_option("--model", tr.model, "logreg | mlp | riskalign")
      ->required();
  c_tr->add_option("--out", tr.out, "model file to write")->required();
  c_tr->add_option("--config", tr.config_path, "config file");
  c_tr->add_option("--train-end", tr.train_end, "training window end");
  c_tr->add_option("--val-end", tr.val_end, "validation window end");
  c_tr->add_option("--test-end", tr.test_end, "test window end");
  c_tr->add_option("--llm-scores", tr.llm_scores,
                   "id,score CSV appended as the llm_score feature (logreg)");

  ScoreArgs sc;
  CLI::App* c_sc = app.add_subcommand("score", "Score diffs with a model");
  c_sc->add_option("--corpus", sc.corpus, "corpus file")->required();
  c_sc->add_option("--model", sc.model, "model file")->required();
  c_sc->add_option("--out", sc.out, "id,score CSV to write")->required();
  c_sc->add_option("--config", sc.config_path, "config file");
  c_sc->add_option("--llm-scores", sc.llm_scores, "id,score CSV (ensemble)");

  GateArgs ga;
  CLI::App* c_ga = app.add_subcommand(
      "gate", "Calibrate zone cutoffs and decide allow/gate per diff");
  c_ga->add_option("--corpus", ga.corpus, "diffs to decide")->required();
  c_ga->add_option("--model", ga.model, "model file")->required();
  c_ga->add_option("--zone", ga.zone, "zone name from the policy")
      ->required();
  c_ga->add_option("--out", ga.out, "decision JSONL to write")->required();
  c_ga->add_option("--calibration-corpus", ga.calibration_corpus,
                   "score window for cutoffs (default: --corpus)");
  c_ga->add_option("--config", ga.config_path, "config file");
  c_ga->add_option("--llm-scores", ga.llm_scores, "id,score CSV (ensemble)");
  c_ga->add_flag("--print-reports", ga.print_reports,
                 "print each diff's risk report");

  EvaluateArgs ev;
  CLI::App* c_ev = app.add_subcommand(
      "evaluate", "Capture table on the chronological test window");
  c_ev->add_option("--corpus", ev.corpus, "corpus file")->required();
  c_ev->add_option("--model", ev.models, "model file (repeatable)")
      ->required();
  c_ev->add_option("--baseline", ev.baseline,
                   "'random' or a model id (default random)");
  c_ev->add_option("--out", ev.out, "capture CSV to write");
  c_ev->add_option("--curve", ev.curve, "capture-vs-g CSV to write");
  c_ev->add_option("--config", ev.config_path, "config file");
  c_ev->add_option("--train-end", ev.train_end, "training window end");
  c_ev->add_option("--val-end", ev.val_end, "validation window end");
  c_ev->add_option("--test-end", ev.test_end, "test window end");
  c_ev->add_option("--llm-scores", ev.llm_scores, "id,score CSV (ensemble)");

  ReportArgs re;
  CLI::App* c_re = app.add_subcommand(
      "report", "Render the risk report for one diff");
  c_re->add_option("--corpus", re.corpus, "corpus file")->required();
  c_re->add_option("--model", re.model, "model file")->required();
  c_re->add_option("--id", re.id, "diff id")->required();
  c_re->add_option("--zone", re.zone, "zone name")->required();
  c_re->add_option("--calibration-corpus", re.calibration_corpus,
                   "score window for cutoffs (default: --corpus)");
  c_re->add_option("--config", re.config_path, "config file");
  c_re->add_option("--llm-scores", re.llm_scores, "id,score CSV (ensemble)");

  EscalateArgs es;
  CLI::App* c_es = app.add_subcommand(
      "escalate", "Record an override for a gated diff");
  c_es->add_option("--id", es.id, "diff id")->required();
  c_es->add_option("--reason", es.reason, "reason code")->required();
  c_es->add_option("--approver", es.approver, "who approved")->required();
  c_es->add_option("--justification", es.justification, "free-form note");
  c_es->add_option("--outcome", es.outcome, "approved | rejected");
  c_es->add_option("--log", es.log, "escalation log path");
  c_es->add_option("--config", es.config_path, "config file");

  try {
    app.parse(argc, argv);
    if (*c_ing) run_ingest(ing);
    if (*c_tr) run_train(tr);
    if (*c_sc) run_score(sc);
    if (*c_ga) run_gate(ga);
    if (*c_ev) run_evaluate(ev);
    if (*c_re) run_report(re);
    if (*c_es) run_escalate(es);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const drs::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
