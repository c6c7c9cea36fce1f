#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "drs/embed.hpp"
#include "drs/riskalign.hpp"

#include "json.hpp"

namespace drs {

// Talks line-delimited JSON to a child process: one request object per line
// on its stdin, one response object per line on its stdout. A response of
// {"error": "..."} raises. Calls are serialized, so the wrapper is safe to
// share between threads even when the child is not.
class ProviderProcess {
 public:
  explicit ProviderProcess(std::vector<std::string> argv);
  ~ProviderProcess();
  ProviderProcess(const ProviderProcess&) = delete;
  ProviderProcess& operator=(const ProviderProcess&) = delete;

  nlohmann::json call(const nlohmann::json& request);
  const std::vector<std::string>& command() const { return argv_; }

 private:
  std::vector<std::string> argv_;
  std::mutex mu_;
  int child_pid_ = -1;
  int to_child_ = -1;    // we write requests here
  FILE* from_child_ = nullptr;  // buffered reader over the child's stdout
};

// Requests: {"op":"dim"} -> {"dim": d}
//           {"op":"embed","text": s} -> {"hidden": [[f,...], ...]}
class ExternalEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit ExternalEmbeddingProvider(std::vector<std::string> argv);
  HiddenStates embed(const std::string& text) const override;
  std::size_t dim() const override;
  bool thread_safe() const override { return true; }

 private:
  mutable ProviderProcess proc_;
  std::size_t dim_ = 0;
};

// Requests: {"op":"next_token_probs","prompt": s,"tokens":["0","1"]}
//           -> {"probs": {"0": p0, "1": p1}}
class ExternalNextTokenProvider final : public NextTokenProvider {
 public:
  explicit ExternalNextTokenProvider(std::vector<std::string> argv);
  std::map<std::string, double> next_token_probs(
      const std::string& prompt) const override;
  bool thread_safe() const override { return true; }

 private:
  mutable ProviderProcess proc_;
};

}  // namespace drs
