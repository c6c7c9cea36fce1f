#include "drs/provider_client.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "drs/error.hpp"

namespace drs {

namespace {

std::string join_argv(const std::vector<std::string>& argv) {
  std::string s;
  for (const std::string& a : argv) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

}  // namespace

ProviderProcess::ProviderProcess(std::vector<std::string> argv)
    : argv_(std::move(argv)) {
  if (argv_.empty()) throw UsageError("provider: empty command");
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw std::runtime_error("provider: pipe() failed");
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("provider: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> cargv;
    cargv.reserve(argv_.size() + 1);
    for (std::string& a : argv_) cargv.push_back(a.data());
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  child_pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
  if (!from_child_) {
    close(out_pipe[0]);
    throw std::runtime_error("provider: fdopen() failed");
  }
}

ProviderProcess::~ProviderProcess() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_) fclose(from_child_);
  if (child_pid_ > 0) {
    int status = 0;
    waitpid(child_pid_, &status, 0);
  }
}

nlohmann::json ProviderProcess::call(const nlohmann::json& request) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string line = request.dump() + "\n";
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t w = write(to_child_, line.data() + off, line.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("provider '" + join_argv(argv_) +
                               "': write failed (" +
                               std::string(std::strerror(errno)) + ")");
    }
    off += static_cast<std::size_t>(w);
  }
  std::string reply;
  char buf[4096];
  while (fgets(buf, sizeof buf, from_child_)) {
    reply += buf;
    if (!reply.empty() && reply.back() == '\n') break;
  }
  if (reply.empty() || reply.back() != '\n')
    throw std::runtime_error("provider '" + join_argv(argv_) +
                             "' closed the pipe (is the command runnable?)");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("provider '" + join_argv(argv_) +
                             "': bad JSON reply: " + e.what());
  }
  if (j.is_object() && j.contains("error"))
    throw std::runtime_error("provider '" + join_argv(argv_) +
                             "': " + j["error"].dump());
  return j;
}

ExternalEmbeddingProvider::ExternalEmbeddingProvider(
    std::vector<std::string> argv)
    : proc_(std::move(argv)) {
  const nlohmann::json r = proc_.call({{"op", "dim"}});
  if (!r.is_object() || !r.contains("dim") ||
      !r["dim"].is_number_unsigned())
    throw std::runtime_error("provider: dim reply must be {\"dim\": n}");
  dim_ = r["dim"].get<std::size_t>();
  if (dim_ == 0) throw std::runtime_error("provider: dim must be positive");
}

std::size_t ExternalEmbeddingProvider::dim() const { return dim_; }

HiddenStates ExternalEmbeddingProvider::embed(const std::string& text) const {
  const nlohmann::json r = proc_.call({{"op", "embed"}, {"text", text}});
  if (!r.is_object() || !r.contains("hidden") || !r["hidden"].is_array())
    throw std::runtime_error(
        "provider: embed reply must be {\"hidden\": [[...], ...]}");
  const nlohmann::json& rows = r["hidden"];
  HiddenStates h;
  h.rows = rows.size();
  h.cols = dim_;
  h.data.reserve(h.rows * h.cols);
  for (const nlohmann::json& row : rows) {
    if (!row.is_array() || row.size() != dim_)
      throw std::runtime_error(
          "provider: hidden-state row width does not match dim");
    for (const nlohmann::json& v : row) h.data.push_back(v.get<double>());
  }
  if (h.rows == 0) {  // keep the all-zero single-row convention
    h.rows = 1;
    h.data.assign(h.cols, 0.0);
  }
  return h;
}

ExternalNextTokenProvider::ExternalNextTokenProvider(
    std::vector<std::string> argv)
    : proc_(std::move(argv)) {}

std::map<std::string, double> ExternalNextTokenProvider::next_token_probs(
    const std::string& prompt) const {
  const nlohmann::json r = proc_.call({{"op", "next_token_probs"},
                                       {"prompt", prompt},
                                       {"tokens", {"0", "1"}}});
  if (!r.is_object() || !r.contains("probs") || !r["probs"].is_object())
    throw std::runtime_error(
        "provider: next_token_probs reply must be {\"probs\": {...}}");
  std::map<std::string, double> out;
  for (const auto& [tok, p] : r["probs"].items())
    out[tok] = p.get<double>();
  return out;
}

}  // namespace drs
