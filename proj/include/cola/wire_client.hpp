#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "cola/evaluators.hpp"

namespace cola::wire {

// A bidirectional byte stream carrying newline-delimited messages.
// Implementations own the transport (child process pipes or a TCP socket).
class LineStream {
 public:
  virtual ~LineStream() = default;
  virtual void send_line(const std::string& line) = 0;
  // Blocks up to timeout_ms for one full line (newline stripped).
  // Throws EvaluationError on timeout or closed stream.
  virtual std::string recv_line(int timeout_ms) = 0;
  // True once at least one byte has arrived; used to tell "server never
  // came up" apart from "server failed mid-run".
  virtual bool ever_received() const = 0;
  // True after end-of-stream or a broken pipe.
  virtual bool closed() const = 0;
};

// Spawns `command` via /bin/sh -c and talks over its standard I/O.
// Throws BackendError if the child cannot be started or dies immediately.
std::unique_ptr<LineStream> spawn_process(const std::string& command);

// Connects to "host:port". Throws BackendError on resolution/connect failure.
std::unique_ptr<LineStream> connect_tcp(const std::string& address);

// "host:port" (single colon, numeric port, no spaces) selects TCP;
// anything else is treated as a shell command to spawn.
bool looks_like_address(const std::string& server);
std::unique_ptr<LineStream> open_server(const std::string& server);

// One request/response exchange. Sends {"id","path"}, expects a response
// whose id matches; "error" present, malformed JSON, wrong id, or a missing
// "correct" field all raise EvaluationError carrying the raw response line.
EvaluationOutcome external_evaluate(LineStream& stream,
                                    const TaskInstance& instance,
                                    const LayerPath& path, int num_layers,
                                    double rho, int timeout_ms);

// Evaluator facade over one connection. Requests are serialized with a
// mutex so the stream sees one exchange at a time even when the corpus
// runner calls in from several workers.
class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(std::unique_ptr<LineStream> stream, int num_layers,
                    double rho = 0.0, int timeout_ms = 30000)
      : stream_(std::move(stream)),
        num_layers_(num_layers),
        rho_(rho),
        timeout_ms_(timeout_ms) {}

  int num_layers() const override { return num_layers_; }
  EvaluationOutcome evaluate(const TaskInstance& instance,
                             const LayerPath& path) const override;

 private:
  std::unique_ptr<LineStream> stream_;
  int num_layers_;
  double rho_;
  int timeout_ms_;
  mutable std::mutex lock_;
};

}  // namespace cola::wire
