#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

#include "sbice/sim/simulator.hpp"

namespace sbice {

/// Request line, without the trailing newline:
/// {"theta":{...},"n":<int>,"seed":<uint64>}
std::string encode_worker_request(const ThetaVector& theta, Eigen::Index n,
                                  std::uint64_t seed);

/// A child process speaking the line protocol on its stdin/stdout.
class WorkerProcess {
 public:
  WorkerProcess(const std::vector<std::string>& argv,
                const std::filesystem::path& working_dir);
  ~WorkerProcess();
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  void send_line(const std::string& line);

  /// Next line without its newline. ProtocolError(timeout) past the deadline,
  /// ProtocolError(nonzero_exit) if the worker closes its output first.
  std::string read_line(std::chrono::steady_clock::time_point deadline);

  bool alive() const { return pid_ > 0; }

 private:
  [[noreturn]] void fail_on_eof();
  void terminate();

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

/// Performs one request/response exchange per simulate call. Persistent
/// workers are kept idle between calls, one per concurrent caller.
class ExternalWorkerPool {
 public:
  explicit ExternalWorkerPool(ExternalConfig config);
  ~ExternalWorkerPool();

  Dataset request(const ThetaVector& theta, Eigen::Index n, std::uint64_t seed);

 private:
  std::unique_ptr<WorkerProcess> checkout();
  void checkin(std::unique_ptr<WorkerProcess> worker);

  ExternalConfig config_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<WorkerProcess>> idle_;
};

GeneratedDataset external_simulate(const ExternalConfig& config, const ThetaVector& theta,
                                   const RandomStream& stream, Eigen::Index n);

}  // namespace sbice
