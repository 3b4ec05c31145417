#include "cola/wire_client.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "cola/errors.hpp"

namespace cola::wire {

namespace {

void ignore_sigpipe() {
  // A dead server must surface as a write error, not kill the client.
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

// Shared pump: buffered line reads and full writes over poll()-able fds.
class FdLineStream : public LineStream {
 public:
  FdLineStream(int read_fd, int write_fd)
      : read_fd_(read_fd), write_fd_(write_fd) {}

  ~FdLineStream() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  void send_line(const std::string& line) override {
    std::string framed = line;
    framed.push_back('\n');
    std::size_t sent = 0;
    while (sent < framed.size()) {
      const ssize_t n =
          ::write(write_fd_, framed.data() + sent, framed.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EPIPE || errno == ECONNRESET) closed_ = true;
        throw EvaluationError(
            std::string("wire: send failed: ") + std::strerror(errno), "");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string recv_line(int timeout_ms) override {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0)
        throw EvaluationError("wire: timeout waiting for response", buffer_);
      struct pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError(
            std::string("wire: poll failed: ") + std::strerror(errno), buffer_);
      }
      if (rc == 0)
        throw EvaluationError("wire: timeout waiting for response", buffer_);
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EvaluationError(
            std::string("wire: read failed: ") + std::strerror(errno), buffer_);
      }
      if (n == 0) {
        closed_ = true;
        throw EvaluationError("wire: server closed the stream", buffer_);
      }
      ever_received_ = true;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  bool ever_received() const override { return ever_received_; }
  bool closed() const override { return closed_; }

 protected:
  int read_fd_;
  int write_fd_;

 private:
  std::string buffer_;
  bool ever_received_ = false;
  bool closed_ = false;
};

class ProcessLineStream final : public FdLineStream {
 public:
  ProcessLineStream(int read_fd, int write_fd, pid_t pid)
      : FdLineStream(read_fd, write_fd), pid_(pid) {}

  ~ProcessLineStream() override {
    // Closing the child's stdin asks it to exit; escalate if it does not.
    // The kill targets the child's process group: /bin/sh may fork rather
    // than exec the server, and killing the shell alone would orphan it.
    ::close(write_fd_);
    write_fd_ = -1;
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineStream> spawn_process(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw BackendError("wire: pipe() failed: " +
                       std::string(std::strerror(errno)));
  const pid_t pid = ::fork();
  if (pid < 0)
    throw BackendError("wire: fork() failed: " +
                       std::string(std::strerror(errno)));
  if (pid == 0) {
    ::setpgid(0, 0);  // own group so teardown can reach grandchildren
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // both sides race to set it; either one suffices
  ::close(to_child[0]);
  ::close(from_child[1]);

  // Catch commands that die on startup (not found, import error) so the
  // caller can abort before queueing any work.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  int status = 0;
  if (::waitpid(pid, &status, WNOHANG) == pid) {
    ::kill(-pid, SIGKILL);  // sweep any grandchild the command left behind
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw BackendError("wire: server command exited immediately: " + command);
  }
  return std::make_unique<ProcessLineStream>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineStream> connect_tcp(const std::string& address) {
  ignore_sigpipe();
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw BackendError("wire: address must be host:port, got '" + address +
                       "'");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  struct addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  struct addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0)
    throw BackendError("wire: cannot resolve '" + address +
                       "': " + ::gai_strerror(rc));
  int fd = -1;
  for (struct addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw BackendError("wire: cannot connect to '" + address +
                       "': " + std::strerror(errno));
  return std::make_unique<FdLineStream>(fd, fd);
}

bool looks_like_address(const std::string& server) {
  const auto colon = server.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == server.size())
    return false;
  for (std::size_t i = colon + 1; i < server.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(server[i]))) return false;
  for (std::size_t i = 0; i < colon; ++i) {
    const char c = server[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '/' || c == ':')
      return false;
  }
  return true;
}

std::unique_ptr<LineStream> open_server(const std::string& server) {
  if (server.empty()) throw BackendError("wire: empty server specification");
  return looks_like_address(server) ? connect_tcp(server)
                                    : spawn_process(server);
}

EvaluationOutcome external_evaluate(LineStream& stream,
                                    const TaskInstance& instance,
                                    const LayerPath& path, int num_layers,
                                    double rho, int timeout_ms) {
  nlohmann::json request{{"id", instance.id}, {"path", encode_path(path)}};
  stream.send_line(request.dump());
  const std::string raw = stream.recv_line(timeout_ms);

  nlohmann::json response = nlohmann::json::parse(raw, nullptr, false);
  if (response.is_discarded() || !response.is_object())
    throw EvaluationError("wire: malformed response", raw);
  if (response.contains("error"))
    throw EvaluationError(
        "wire: server error: " + response["error"].dump(), raw);
  if (!response.contains("id") || !response["id"].is_string() ||
      response["id"].get<std::string>() != instance.id)
    throw EvaluationError("wire: response id does not match request", raw);
  if (!response.contains("correct") || !response["correct"].is_boolean())
    throw EvaluationError("wire: response lacks boolean 'correct'", raw);

  std::optional<std::string> answer;
  if (response.contains("answer") && response["answer"].is_string())
    answer = response["answer"].get<std::string>();
  return make_outcome(response["correct"].get<bool>(), path, num_layers, rho,
                      std::move(answer));
}

EvaluationOutcome ExternalEvaluator::evaluate(const TaskInstance& instance,
                                              const LayerPath& path) const {
  std::lock_guard<std::mutex> guard(lock_);
  try {
    return external_evaluate(*stream_, instance, path, num_layers_, rho_,
                             timeout_ms_);
  } catch (const EvaluationError&) {
    // A stream that dropped before producing a single byte means the server
    // never came up: that is a backend failure, not a per-path one.
    if (stream_->closed() && !stream_->ever_received())
      throw BackendError("wire: external backend unreachable");
    throw;
  }
}

}  // namespace cola::wire
