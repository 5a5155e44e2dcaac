#include "sbice/sim/external.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sbice/errors.hpp"

namespace sbice {
namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit code " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
  return "status " + std::to_string(status);
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

std::string encode_worker_request(const ThetaVector& theta, Eigen::Index n,
                                  std::uint64_t seed) {
  nlohmann::ordered_json req;
  req["theta"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : theta.entries()) req["theta"][name] = value;
  req["n"] = static_cast<std::int64_t>(n);
  req["seed"] = seed;
  return req.dump();
}

WorkerProcess::WorkerProcess(const std::vector<std::string>& argv,
                             const std::filesystem::path& working_dir) {
  if (argv.empty()) throw ProtocolError(ProtocolFailure::spawn_failed, "empty worker command");
  ignore_sigpipe();
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw ProtocolError(ProtocolFailure::spawn_failed, std::strerror(errno));
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError(ProtocolFailure::spawn_failed, std::strerror(errno));
  }
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw ProtocolError(ProtocolFailure::spawn_failed, std::strerror(errno));
  }

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const std::string dir = working_dir.string();

  const pid_t pid = ::fork();
  if (pid == 0) {
    // Child: only async-signal-safe calls from here on.
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    int code = 0;
    if (!dir.empty() && ::chdir(dir.c_str()) != 0) {
      code = errno;
    } else {
      ::execvp(args[0], args.data());
      code = errno;
    }
    [[maybe_unused]] auto w = ::write(err_pipe[1], &code, sizeof code);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  if (pid < 0) {
    const int code = errno;
    for (int fd : {in_pipe[1], out_pipe[0], err_pipe[0]}) ::close(fd);
    throw ProtocolError(ProtocolFailure::spawn_failed,
                        std::string("fork failed: ") + std::strerror(code));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  int code = 0;
  ssize_t got;
  do {
    got = ::read(err_pipe[0], &code, sizeof code);
  } while (got < 0 && errno == EINTR);
  ::close(err_pipe[0]);
  if (got > 0) {
    terminate();
    throw ProtocolError(ProtocolFailure::spawn_failed,
                        "cannot start worker '" + argv.front() + "': " + std::strerror(code));
  }
}

WorkerProcess::~WorkerProcess() {
  if (pid_ <= 0) return;
  close_fd(to_child_);
  // Give a well-behaved worker a moment to exit on EOF before killing it.
  for (int i = 0; i < 50; ++i) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      close_fd(from_child_);
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  terminate();
}

void WorkerProcess::terminate() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
  }
  pid_ = -1;
}

void WorkerProcess::send_line(const std::string& line) {
  if (pid_ <= 0) throw ProtocolError(ProtocolFailure::nonzero_exit, "worker is not running");
  std::string buf = line + "\n";
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t w = ::write(to_child_, buf.data() + off, buf.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      fail_on_eof();
    }
    off += static_cast<std::size_t>(w);
  }
}

void WorkerProcess::fail_on_eof() {
  close_fd(to_child_);
  close_fd(from_child_);
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, 0);
  } while (r < 0 && errno == EINTR);
  pid_ = -1;
  if (r > 0 && WIFEXITED(status) && WEXITSTATUS(status) == 0) {
    throw ProtocolError(ProtocolFailure::malformed_csv,
                        "worker exited before completing its response");
  }
  throw ProtocolError(ProtocolFailure::nonzero_exit,
                      "worker terminated with " + describe_status(status));
}

std::string WorkerProcess::read_line(std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (pid_ <= 0) throw ProtocolError(ProtocolFailure::nonzero_exit, "worker is not running");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      terminate();
      throw ProtocolError(ProtocolFailure::timeout, "worker did not answer before the timeout");
    }
    pollfd p{from_child_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      terminate();
      throw ProtocolError(ProtocolFailure::nonzero_exit, std::strerror(errno));
    }
    if (ready == 0) continue;
    char buf[65536];
    const ssize_t got = ::read(from_child_, buf, sizeof buf);
    if (got < 0) {
      if (errno == EINTR) continue;
      fail_on_eof();
    }
    if (got == 0) fail_on_eof();
    pending_.append(buf, static_cast<std::size_t>(got));
  }
}

ExternalWorkerPool::ExternalWorkerPool(ExternalConfig config) : config_(std::move(config)) {}

ExternalWorkerPool::~ExternalWorkerPool() = default;

std::unique_ptr<WorkerProcess> ExternalWorkerPool::checkout() {
  if (config_.mode == WorkerMode::persistent) {
    std::lock_guard lock(mutex_);
    if (!idle_.empty()) {
      auto w = std::move(idle_.back());
      idle_.pop_back();
      return w;
    }
  }
  return std::make_unique<WorkerProcess>(config_.command, config_.working_dir);
}

void ExternalWorkerPool::checkin(std::unique_ptr<WorkerProcess> worker) {
  if (config_.mode != WorkerMode::persistent || !worker->alive()) return;
  std::lock_guard lock(mutex_);
  idle_.push_back(std::move(worker));
}

Dataset ExternalWorkerPool::request(const ThetaVector& theta, Eigen::Index n,
                                    std::uint64_t seed) {
  auto worker = checkout();
  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(config_.timeout_seconds));
  worker->send_line(encode_worker_request(theta, n, seed));

  std::string line = worker->read_line(deadline);
  if (line.rfind("ERROR", 0) == 0) {
    std::string msg = line.size() > 6 ? line.substr(6) : std::string("unspecified");
    checkin(std::move(worker));
    throw ProtocolError(ProtocolFailure::worker_error, "worker reported: " + msg);
  }
  if (line != "BEGIN_CSV") {
    throw ProtocolError(ProtocolFailure::malformed_csv,
                        "expected BEGIN_CSV, got '" + line.substr(0, 80) + "'");
  }
  std::string header = worker->read_line(deadline);
  std::ostringstream body;
  body << header << '\n';
  for (;;) {
    line = worker->read_line(deadline);
    if (line == "END_CSV") break;
    body << line << '\n';
  }
  checkin(std::move(worker));

  std::optional<Dataset> parsed;
  try {
    const ColumnSchema schema =
        schema_from_header(header, config_.treatment_column, config_.outcome_column);
    std::istringstream in(body.str());
    parsed.emplace(read_csv(in, schema, "worker response"));
  } catch (const Error& e) {
    throw ProtocolError(ProtocolFailure::malformed_csv,
                        std::string("worker CSV rejected: ") + e.what());
  }
  if (parsed->n() != n) {
    throw ProtocolError(ProtocolFailure::row_count_mismatch,
                        "worker returned " + std::to_string(parsed->n()) + " rows, expected " +
                            std::to_string(n));
  }
  return std::move(*parsed);
}

GeneratedDataset external_simulate(const ExternalConfig& config, const ThetaVector& theta,
                                   const RandomStream& stream, Eigen::Index n) {
  if (!config.parameters.empty()) theta.require_names(config.parameters);
  ExternalWorkerPool pool(config);
  Dataset d = pool.request(theta, n, stream.derived_seed());
  return GeneratedDataset{std::move(d), theta, theta.find("tau")};
}

}  // namespace sbice
