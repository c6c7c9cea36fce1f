#include "drs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drs/error.hpp"
#include "drs/mathfn.hpp"
#include "drs/rng.hpp"

namespace drs {

namespace {

struct FileInfo {
  std::string path;
  std::string language;
  long base_size = 0;
  bool risky = false;
};

struct Draft {
  DiffRecord rec;
  double latent = 0.0;       // u_i, unit-scale risk signal
  bool has_marker_slot = false;
};

const std::vector<std::pair<std::string, std::string>>& extensions() {
  static const std::vector<std::pair<std::string, std::string>> kExts = {
      {".cpp", "cpp"},     {".py", "python"}, {".java", "java"},
      {".js", "javascript"}, {".go", "go"},   {".rs", "rust"},
      {".php", "php"},     {".md", "other"},
  };
  return kExts;
}

std::string zero_pad(std::size_t v, int width) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

// Filler source lines; three of the eight contain branching keywords so the
// accumulated complexity proxy has something to count.
std::string filler_line(std::uint64_t salt) {
  const int v = static_cast<int>(salt % 97);
  switch (salt % 8) {
    case 0: { std::ostringstream os; os << "value = transform(value, " << v << ");"; return os.str(); }
    case 1: { std::ostringstream os; os << "if (value > " << v << ") { value -= 1; }"; return os.str(); }
    case 2: { std::ostringstream os; os << "emit_metric(\"lat\", " << v << ");"; return os.str(); }
    case 3: { std::ostringstream os; os << "for (int i = 0; i < " << v << "; ++i) { acc += i; }"; return os.str(); }
    case 4: { std::ostringstream os; os << "buffer.push_back(" << v << ");"; return os.str(); }
    case 5: { std::ostringstream os; os << "while (pending > " << v << ") { drain(); }"; return os.str(); }
    case 6: { std::ostringstream os; os << "log_debug(\"step " << v << "\");"; return os.str(); }
    default: { std::ostringstream os; os << "total += weight * " << v << ";"; return os.str(); }
  }
}

Hunk creation_hunk(long n_lines, std::uint64_t salt) {
  Hunk h;
  h.old_start = 0;
  h.old_len = 0;
  h.new_start = 1;
  h.new_len = n_lines;
  h.lines.reserve(static_cast<std::size_t>(n_lines));
  for (long j = 0; j < n_lines; ++j)
    h.lines.emplace_back(LineTag::add, filler_line(splitmix64(salt + j)));
  return h;
}

Hunk modification_hunk(long old_size, long add, long del, std::uint64_t salt,
                       Rng& rng) {
  const long ctx = std::min<long>(3, std::max<long>(old_size - del, 0));
  Hunk h;
  const long span_old = del + ctx;
  const long max_start = std::max<long>(old_size - span_old + 1, 1);
  h.old_start = 1 + static_cast<long>(rng.below(max_start));
  h.new_start = h.old_start;
  h.old_len = del + ctx;
  h.new_len = add + ctx;
  long c = ctx;
  // Leading context, deletions, additions, no trailing context: a valid,
  // boring shape that keeps the arithmetic simple.
  for (long j = 0; j < c; ++j)
    h.lines.emplace_back(LineTag::context, filler_line(splitmix64(salt ^ j)));
  for (long j = 0; j < del; ++j)
    h.lines.emplace_back(LineTag::del, filler_line(splitmix64(salt + 31 + j)));
  for (long j = 0; j < add; ++j)
    h.lines.emplace_back(LineTag::add, filler_line(splitmix64(salt + 77 + j)));
  return h;
}

const std::vector<std::string>& title_verbs() {
  static const std::vector<std::string> kVerbs = {
      "Tune", "Refactor", "Update", "Extend", "Simplify", "Harden"};
  return kVerbs;
}

const std::vector<std::string>& title_nouns() {
  static const std::vector<std::string> kNouns = {
      "pipeline", "handler", "cache layer", "retry logic",
      "config loading", "request routing"};
  return kNouns;
}

}  // namespace

const std::vector<std::string>& risky_marker_tokens() {
  static const std::vector<std::string> kRisky = {
      "unguarded_rollout", "bypass_validation", "forced_override",
      "skip_canary",       "raw_ptr_cast",      "hot_config_swap"};
  return kRisky;
}

const std::vector<std::string>& benign_marker_tokens() {
  static const std::vector<std::string> kBenign = {
      "doc_touchup", "rename_cleanup", "comment_fix",
      "test_only",   "format_pass",    "dead_code_removal"};
  return kBenign;
}

Corpus generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n == 0) throw UsageError("generate_synthetic: n must be positive");
  if (!(cfg.sev_rate > 0.0 && cfg.sev_rate < 1.0))
    throw UsageError("generate_synthetic: sev_rate must be in (0, 1)");
  if (cfg.signal_strength < 0.0)
    throw UsageError("generate_synthetic: signal_strength must be >= 0");
  if (cfg.n_authors == 0 || cfg.n_files == 0)
    throw UsageError("generate_synthetic: need at least one author and file");
  if (cfg.end_ts <= cfg.start_ts)
    throw UsageError("generate_synthetic: end_ts must be after start_ts");

  Rng struct_rng(splitmix64(cfg.seed ^ 0x5354525543545552ULL));
  Rng label_rng(splitmix64(cfg.seed ^ 0x4c4142454c53ULL));
  Rng token_rng(splitmix64(cfg.seed ^ 0x544f4b454e53ULL));

  // Static file table; ~10% of files carry elevated latent risk.
  std::vector<FileInfo> files(cfg.n_files);
  const std::size_t n_dirs = std::max<std::size_t>(4, cfg.n_files / 8);
  for (std::size_t f = 0; f < cfg.n_files; ++f) {
    const auto& [ext, lang] = extensions()[f % extensions().size()];
    const std::size_t d = f % n_dirs;
    const std::string dir = d == 0 ? "core" : "svc" + zero_pad(d, 2);
    files[f].path = cfg.org + "/" + dir + "/mod" + zero_pad(f, 4) + ext;
    files[f].language = lang;
    files[f].base_size = 60 + 17 * static_cast<long>(f % 50);
    files[f].risky = splitmix64(cfg.seed * 0x9e3779b9ULL + f) % 1000 < 100;
  }

  std::vector<long> current_size(cfg.n_files, 0);
  std::vector<bool> exists(cfg.n_files, false);
  std::vector<std::size_t> author_prior(cfg.n_authors, 0);
  const double mean_lp =
      std::log(1.0 + static_cast<double>(cfg.n) /
                         (2.0 * static_cast<double>(cfg.n_authors)));

  std::vector<Draft> drafts;
  drafts.reserve(cfg.n);
  const double span = static_cast<double>(cfg.end_ts - cfg.start_ts);

  for (std::size_t i = 0; i < cfg.n; ++i) {
    Draft d;
    DiffRecord& r = d.rec;
    r.id = "syn-" + zero_pad(i, 6);
    r.closed_at = cfg.start_ts +
                  static_cast<std::int64_t>(span * static_cast<double>(i) /
                                            static_cast<double>(cfg.n));
    r.org = cfg.org;

    const std::size_t author = struct_rng.below(cfg.n_authors);
    r.author_id = "dev" + zero_pad(author, 3);

    const double churn_z = struct_rng.normal();
    const double diffusion_z = struct_rng.normal();
    const std::size_t k = std::min<std::size_t>(
        cfg.n_files,
        1 + static_cast<std::size_t>(std::floor(std::exp(0.7 * diffusion_z))));
    std::vector<std::size_t> chosen =
        struct_rng.sample_indices(cfg.n_files, k);

    bool any_risky = false;
    long total_base = 0;
    for (std::size_t f : chosen) {
      any_risky = any_risky || files[f].risky;
      total_base += exists[f] ? current_size[f] : files[f].base_size;
    }

    const double author_term =
        (mean_lp - std::log(1.0 + static_cast<double>(author_prior[author]))) /
        1.5;
    const double risky_term = (any_risky ? 0.9 : -0.1) / 0.3;
    d.latent = (0.5 * churn_z + 0.3 * diffusion_z + 0.3 * author_term +
                0.5 * risky_term) /
               0.8;

    // Total churn follows the latent churn term: ratio ~= exp(-2.6 + 0.9 z).
    const long total_churn = std::max<long>(
        1, std::lround((static_cast<double>(total_base) + 1.0) *
                       std::exp(-2.6 + 0.9 * churn_z)));

    long remaining = total_churn;
    for (std::size_t ci = 0; ci < chosen.size(); ++ci) {
      const std::size_t f = chosen[ci];
      FileChange fc;
      fc.path = files[f].path;
      fc.language = files[f].language;
      const std::uint64_t salt =
          splitmix64(cfg.seed + i * 1315423911ULL + f * 2654435761ULL);
      if (!exists[f]) {
        fc.is_new_file = true;
        const long size = files[f].base_size;
        fc.hunks.push_back(creation_hunk(size, salt));
        fc.file_size_after = size;
        exists[f] = true;
        current_size[f] = size;
      } else {
        const long share =
            ci + 1 == chosen.size()
                ? remaining
                : std::max<long>(1, remaining / static_cast<long>(
                                                    chosen.size() - ci));
        remaining -= share;
        // Mean-reverting add/delete split: grow below the base size, shrink
        // above it. Keeps file sizes (and so per-record churn) stationary
        // over long corpora instead of compounding.
        const double grow =
            current_size[f] > files[f].base_size ? 0.35 : 0.65;
        long add = std::max<long>(1, std::lround(grow * share));
        long del = std::max<long>(0, share - add);
        del = std::min(del, std::max<long>(current_size[f] - 5, 0));
        fc.hunks.push_back(
            modification_hunk(current_size[f], add, del, salt, struct_rng));
        current_size[f] += add - del;
        fc.file_size_after = current_size[f];
      }
      r.changes.push_back(std::move(fc));
    }

    const std::string& verb = title_verbs()[struct_rng.below(
        title_verbs().size())];
    const std::string& noun = title_nouns()[struct_rng.below(
        title_nouns().size())];
    const std::string dir_token =
        r.changes.front().path.substr(cfg.org.size() + 1);
    r.title = verb + " " +
              dir_token.substr(0, dir_token.find('/')) + " " + noun;
    r.test_plan = struct_rng.bernoulli(0.15)
                      ? ""
                      : "ran unit suite; canary on " +
                            std::to_string(1 + struct_rng.below(5)) +
                            " hosts";
    d.has_marker_slot = true;
    author_prior[author] += 1;
    drafts.push_back(std::move(d));
  }

  // Calibrate the intercept so mean(sigmoid(s*u + b)) == sev_rate exactly
  // on the realized latents. s == 0 has the closed form b = logit(rate).
  double b = logit(cfg.sev_rate);
  if (cfg.signal_strength > 0.0) {
    double lo = -40.0, hi = 20.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double mean = 0.0;
      for (const Draft& d : drafts)
        mean += sigmoid(cfg.signal_strength * d.latent + mid);
      mean /= static_cast<double>(drafts.size());
      if (mean < cfg.sev_rate) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    b = 0.5 * (lo + hi);
  }

  Corpus c;
  c.provenance = Provenance::synthetic;
  c.records.reserve(cfg.n);
  const double marker_bias = logit(0.25);
  for (Draft& d : drafts) {
    const double p = sigmoid(cfg.signal_strength * d.latent + b);
    d.rec.caused_sev = label_rng.uniform() < p;

    // Text-borne signal: a risky marker token lands in the title and in an
    // added line, with probability that tracks the same latent signal.
    const double marker_p =
        sigmoid(cfg.signal_strength * d.latent + marker_bias);
    const bool inject = token_rng.uniform() < marker_p;
    const bool benign = !inject && token_rng.bernoulli(0.25);
    const std::string marker =
        inject ? risky_marker_tokens()[token_rng.below(
                     risky_marker_tokens().size())]
               : (benign ? benign_marker_tokens()[token_rng.below(
                               benign_marker_tokens().size())]
                         : "");
    if (!marker.empty()) {
      d.rec.title += " (" + marker + ")";
      for (auto& [tag, text] : d.rec.changes.front().hunks.front().lines) {
        if (tag == LineTag::add) {
          text = "log_event(\"" + marker + "\");";
          break;
        }
      }
    }
    c.generator_truth[d.rec.id] = p;
    c.records.push_back(std::move(d.rec));
  }
  validate_corpus(c);
  return c;
}

}  // namespace drs
