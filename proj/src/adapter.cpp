#include "emobench/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <json.hpp>

namespace emobench {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Child process with piped stdin/stdout/stderr, killed on destruction.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command) {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
      throw Error(ErrorCode::IoFailure, "pipe() failed: " + std::string(std::strerror(errno)));
    }
    pid_ = fork();
    if (pid_ < 0) {
      throw Error(ErrorCode::IoFailure, "fork() failed: " + std::string(std::strerror(errno)));
    }
    if (pid_ == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      dup2(err_pipe[1], STDERR_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) {
        close(fd);
      }
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
    stderr_fd_ = err_pipe[0];
    fcntl(stdout_fd_, F_SETFL, O_NONBLOCK);
    fcntl(stderr_fd_, F_SETFL, O_NONBLOCK);
  }

  ~ChildProcess() {
    close_stdin();
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (stderr_fd_ >= 0) close(stderr_fd_);
    if (pid_ > 0 && !reaped_) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void send_line(const std::string& line) {
    std::string framed = line;
    framed.push_back('\n');
    std::size_t off = 0;
    while (off < framed.size()) {
      const ssize_t n = write(stdin_fd_, framed.data() + off, framed.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::NonZeroExit,
                    "adapter closed its input: " + std::string(std::strerror(errno)) +
                        stderr_tail_suffix());
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void close_stdin() {
    if (stdin_fd_ >= 0) {
      close(stdin_fd_);
      stdin_fd_ = -1;
    }
  }

  // Blocks until a full line arrives or the deadline passes.
  std::string read_line(double timeout_seconds) {
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }

      const auto remaining = deadline - Clock::now();
      if (remaining <= Clock::duration::zero()) {
        throw Error(ErrorCode::Timeout,
                    "adapter sent no reply within " + std::to_string(timeout_seconds) +
                        "s" + stderr_tail_suffix());
      }

      pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {stderr_fd_, POLLIN, 0}};
      const int timeout_ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count() + 1);
      const int rc = poll(fds, 2, timeout_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::IoFailure, "poll() failed: " + std::string(std::strerror(errno)));
      }
      if (rc == 0) continue;  // loop re-checks the deadline

      if (fds[1].revents & (POLLIN | POLLHUP)) drain_stderr();
      if (fds[0].revents & (POLLIN | POLLHUP)) {
        char chunk[4096];
        const ssize_t n = read(stdout_fd_, chunk, sizeof(chunk));
        if (n > 0) {
          buffer_.append(chunk, static_cast<std::size_t>(n));
        } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
          // Child closed stdout: it exited (or crashed) mid-protocol.
          const int status = wait_status();
          throw Error(ErrorCode::NonZeroExit,
                      "adapter exited with status " + std::to_string(status) +
                          " before completing the protocol" + stderr_tail_suffix());
        }
      }
    }
  }

  // Waits for exit, killing the child if it overstays the deadline.
  int wait_exit(double timeout_seconds) {
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    while (Clock::now() < deadline) {
      int status = 0;
      const pid_t rc = waitpid(pid_, &status, WNOHANG);
      if (rc == pid_) {
        reaped_ = true;
        drain_stderr();
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      }
      usleep(2000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    reaped_ = true;
    throw Error(ErrorCode::Timeout, "adapter ignored shutdown" + stderr_tail_suffix());
  }

  std::string stderr_tail() const { return stderr_tail_; }

 private:
  void drain_stderr() {
    char chunk[4096];
    for (;;) {
      const ssize_t n = read(stderr_fd_, chunk, sizeof(chunk));
      if (n <= 0) break;
      stderr_tail_.append(chunk, static_cast<std::size_t>(n));
      if (stderr_tail_.size() > kTailLimit) {
        stderr_tail_.erase(0, stderr_tail_.size() - kTailLimit);
      }
    }
  }

  int wait_status() {
    int status = 0;
    waitpid(pid_, &status, 0);
    reaped_ = true;
    drain_stderr();
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }

  std::string stderr_tail_suffix() {
    drain_stderr();
    if (stderr_tail_.empty()) return "";
    return "; stderr tail: " + stderr_tail_;
  }

  static constexpr std::size_t kTailLimit = 4096;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
  bool reaped_ = false;
  std::string buffer_;
  std::string stderr_tail_;
};

json expect_message(ChildProcess& child, double timeout, const std::string& expected_type,
                    WireCapture* capture) {
  const std::string line = child.read_line(timeout);
  if (capture != nullptr) capture->received.push_back(line);
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::ProtocolViolation,
                "adapter sent invalid JSON: '" + line + "'" +
                    (child.stderr_tail().empty() ? "" : "; stderr tail: " + child.stderr_tail()));
  }
  if (!msg.is_object() || !msg.contains("type")) {
    throw Error(ErrorCode::ProtocolViolation, "adapter message lacks a type: '" + line + "'");
  }
  const bool epoch_ok = expected_type == "fitted" && msg.at("type") == "epoch";
  if (!expected_type.empty() && msg.at("type") != expected_type && !epoch_ok) {
    throw Error(ErrorCode::ProtocolViolation,
                "expected '" + expected_type + "' message, got '" + line + "'");
  }
  return msg;
}

void send_message(ChildProcess& child, const json& msg, WireCapture* capture) {
  const std::string line = msg.dump();
  if (capture != nullptr) capture->sent.push_back(line);
  child.send_line(line);
}

}  // namespace

AdapterRunResult adapter_run(const AdapterConfig& config, Task task, int n_classes,
                             int feature_dim, std::uint64_t seed, const AdapterPaths& paths,
                             int expected_predictions, WireCapture* capture) {
  ChildProcess child(config.command);

  send_message(child,
               json{{"type", "init"},
                    {"protocol", kAdapterProtocolVersion},
                    {"task", task_name(task)},
                    {"n_classes", n_classes},
                    {"feature_dim", feature_dim},
                    {"seed", seed}},
               capture);
  {
    const json ack = expect_message(child, config.timeout_seconds, "ack", capture);
    if (ack.at("type") != "ack" || ack.value("protocol", -1) != kAdapterProtocolVersion) {
      throw Error(ErrorCode::ProtocolViolation,
                  "adapter did not ack protocol version " +
                      std::to_string(kAdapterProtocolVersion) + ": " + ack.dump());
    }
  }

  AdapterRunResult result;
  result.run.model_id = "adapter";
  result.run.seed = seed;

  send_message(child,
               json{{"type", "fit"},
                    {"train_features", paths.train_features.string()},
                    {"train_labels", paths.train_labels.string()},
                    {"val_features", paths.val_features.string()},
                    {"val_labels", paths.val_labels.string()}},
               capture);
  for (;;) {
    const json msg = expect_message(child, config.timeout_seconds, "fitted", capture);
    if (msg.at("type") == "fitted") break;
    // epoch report
    EpochRecord rec;
    rec.epoch = msg.value("epoch", static_cast<int>(result.run.epochs.size()));
    rec.train_loss = msg.value("train_loss", std::numeric_limits<double>::quiet_NaN());
    rec.val_accuracy = msg.value("val_accuracy", 0.0);
    rec.val_macro_f1 = msg.value("val_f1", 0.0);
    result.run.epochs.push_back(rec);
  }
  result.run.selected_epoch = select_checkpoint(result.run.epochs);

  send_message(child, json{{"type", "predict"}, {"features", paths.test_features.string()}},
               capture);
  {
    const json msg = expect_message(child, config.timeout_seconds, "predictions", capture);
    if (msg.at("type") != "predictions" || !msg.contains("labels") ||
        !msg.at("labels").is_array()) {
      throw Error(ErrorCode::ProtocolViolation,
                  "adapter sent no usable predictions: " + msg.dump());
    }
    for (const json& v : msg.at("labels")) {
      if (!v.is_number_integer()) {
        throw Error(ErrorCode::ProtocolViolation,
                    "prediction entries must be integers, got " + v.dump());
      }
      const int label = v.get<int>();
      if (label < 0 || label >= n_classes) {
        throw Error(ErrorCode::ProtocolViolation,
                    "prediction " + std::to_string(label) + " outside [0, " +
                        std::to_string(n_classes) + ")");
      }
      result.predictions.push_back(label);
    }
    if (static_cast<int>(result.predictions.size()) != expected_predictions) {
      throw Error(ErrorCode::ProtocolViolation,
                  "adapter returned " + std::to_string(result.predictions.size()) +
                      " predictions for " + std::to_string(expected_predictions) +
                      " test samples");
    }
  }

  send_message(child, json{{"type", "shutdown"}}, capture);
  child.close_stdin();
  const int status = child.wait_exit(config.timeout_seconds);
  if (status != 0) {
    throw Error(ErrorCode::NonZeroExit,
                "adapter exited with status " + std::to_string(status) +
                    (child.stderr_tail().empty() ? "" : "; stderr tail: " + child.stderr_tail()));
  }
  return result;
}

}  // namespace emobench
