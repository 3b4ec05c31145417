#include <string>

#include "cola/wire_client.hpp"
#include "doctest.h"

using namespace cola;
using namespace cola::wire;

namespace {

std::string mock(const std::string& args) {
  return std::string("python3 ") + COLA_MOCK_SERVER + " " + args;
}

TaskInstance instance_named(const std::string& id) {
  TaskInstance instance;
  instance.id = id;
  instance.payload = nlohmann::json::object();
  instance.expected = nlohmann::json();
  return instance;
}

}  // namespace

// ==== address detection =====================================================

TEST_CASE("looks_like_address accepts host:port only") {
  CHECK(looks_like_address("localhost:9999"));
  CHECK(looks_like_address("127.0.0.1:80"));
  CHECK(looks_like_address("example.test:1"));
  CHECK_FALSE(looks_like_address("python3 server.py"));
  CHECK_FALSE(looks_like_address("server --port 80"));
  CHECK_FALSE(looks_like_address("noport"));
  CHECK_FALSE(looks_like_address("host:"));
  CHECK_FALSE(looks_like_address(":80"));
  CHECK_FALSE(looks_like_address("host:80x"));
  CHECK_FALSE(looks_like_address("a:b:80"));
  CHECK_FALSE(looks_like_address(""));
}

// ==== spawned process transport =============================================

TEST_CASE("a spawned echo server completes the round trip") {
  const auto stream = spawn_process(mock("ok"));
  const auto outcome = external_evaluate(*stream, instance_named("q1"),
                                         {0, 1, 2, 3}, 4, 0.0, 5000);
  CHECK(outcome.correct);
  CHECK(outcome.reward == 1.0);
  CHECK(outcome.depth == 4);
  CHECK(outcome.answer == "4");
  CHECK(stream->ever_received());
  CHECK_FALSE(stream->closed());
}

TEST_CASE("correctness and answer come from the server verbatim") {
  const auto stream = spawn_process(mock("wrong"));
  const auto outcome = external_evaluate(*stream, instance_named("q2"),
                                         {1, 1}, 4, 0.0, 5000);
  CHECK_FALSE(outcome.correct);
  CHECK(outcome.reward == 0.0);
  CHECK(outcome.answer == "7");
}

TEST_CASE("a depth-gated server grades by path length") {
  const auto stream = spawn_process(mock("ok 3"));
  CHECK(external_evaluate(*stream, instance_named("q3"), {0, 2}, 4, 0.0, 5000)
            .correct);
  CHECK_FALSE(external_evaluate(*stream, instance_named("q4"), {0, 1, 2, 3},
                                4, 0.0, 5000)
                  .correct);
}

TEST_CASE("protocol violations raise evaluation errors with the raw line") {
  SUBCASE("mismatched id") {
    const auto stream = spawn_process(mock("mismatch"));
    CHECK_THROWS_WITH_AS(
        external_evaluate(*stream, instance_named("q5"), {0}, 4, 0.0, 5000),
        doctest::Contains("id does not match"), EvaluationError);
  }
  SUBCASE("malformed json") {
    const auto stream = spawn_process(mock("malformed"));
    try {
      external_evaluate(*stream, instance_named("q6"), {0}, 4, 0.0, 5000);
      FAIL("expected EvaluationError");
    } catch (const EvaluationError& err) {
      CHECK(err.raw_response.find("not json") != std::string::npos);
    }
  }
  SUBCASE("server-side error field") {
    const auto stream = spawn_process(mock("error"));
    try {
      external_evaluate(*stream, instance_named("q7"), {0}, 4, 0.0, 5000);
      FAIL("expected EvaluationError");
    } catch (const EvaluationError& err) {
      CHECK(std::string(err.what()).find("boom") != std::string::npos);
      CHECK(err.raw_response.find("boom") != std::string::npos);
    }
  }
}

TEST_CASE("a silent server times out as an evaluation error") {
  const auto stream = spawn_process(mock("silent"));
  CHECK_THROWS_WITH_AS(
      external_evaluate(*stream, instance_named("q8"), {0}, 4, 0.0, 300),
      doctest::Contains("timeout"), EvaluationError);
  CHECK_FALSE(stream->ever_received());
}

TEST_CASE("a command that dies instantly is a backend error") {
  CHECK_THROWS_AS(spawn_process("exit 7"), BackendError);
  // Interpreter startup may outlast the spawn probe, in which case the death
  // must surface as unreachable on first use instead.
  try {
    ExternalEvaluator evaluator(spawn_process(mock("die")), 4, 0.0, 5000);
    CHECK_THROWS_AS(evaluator.evaluate(instance_named("q-die"), {0}),
                    BackendError);
  } catch (const BackendError&) {
    // Caught at spawn time; equally acceptable.
  }
}

// ==== the evaluator facade ==================================================

TEST_CASE("the external evaluator applies the reward law") {
  ExternalEvaluator evaluator(spawn_process(mock("ok")), 4, 0.5, 5000);
  CHECK(evaluator.num_layers() == 4);
  const auto outcome =
      evaluator.evaluate(instance_named("q9"), identity_path(4));
  CHECK(outcome.correct);
  CHECK(outcome.reward == 0.5);  // 1 - 0.5 * 4/4
}

TEST_CASE("per-path server errors pass through as evaluation errors") {
  ExternalEvaluator evaluator(spawn_process(mock("error")), 4, 0.0, 5000);
  CHECK_THROWS_AS(evaluator.evaluate(instance_named("q10"), {0}),
                  EvaluationError);
}

TEST_CASE("a server that dies before answering reads as unreachable") {
  // The 50 ms spawn probe passes while the sleep runs; the stream then
  // closes without a single byte, which the facade reports as the backend
  // being unreachable rather than a path-level failure.
  ExternalEvaluator evaluator(spawn_process("sleep 0.2"), 4, 0.0, 5000);
  CHECK_THROWS_WITH_AS(evaluator.evaluate(instance_named("q11"), {0}),
                       doctest::Contains("unreachable"), BackendError);
}

TEST_CASE("a timeout on a live server is not an unreachable backend") {
  ExternalEvaluator evaluator(spawn_process(mock("silent")), 4, 0.0, 300);
  CHECK_THROWS_AS(evaluator.evaluate(instance_named("q12"), {0}),
                  EvaluationError);
}

// ==== tcp transport =========================================================

TEST_CASE("tcp transport speaks the same protocol") {
  // The helper binds an ephemeral port and prints it on stdout; ride the
  // process stream to learn the address, then connect.
  const auto control = spawn_process(mock("tcp ok 4"));
  const std::string banner = control->recv_line(5000);
  REQUIRE(banner.rfind("PORT ", 0) == 0);
  const std::string address = "127.0.0.1:" + banner.substr(5);
  REQUIRE(looks_like_address(address));

  const auto stream = open_server(address);
  const auto ok = external_evaluate(*stream, instance_named("t1"),
                                    {0, 1}, 4, 0.0, 5000);
  CHECK(ok.correct);
  const auto deep = external_evaluate(*stream, instance_named("t2"),
                                      {0, 1, 2, 3, 0}, 4, 0.0, 5000);
  CHECK_FALSE(deep.correct);
}

TEST_CASE("connecting to a dead port is a backend error") {
  // Port 1 on localhost is never listening in the test sandbox.
  CHECK_THROWS_AS(connect_tcp("127.0.0.1:1"), BackendError);
}

TEST_CASE("open_server dispatches on the server string") {
  const auto process = open_server(mock("ok"));
  const auto outcome = external_evaluate(*process, instance_named("d1"),
                                         {0}, 4, 0.0, 5000);
  CHECK(outcome.correct);
}
