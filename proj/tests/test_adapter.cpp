#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>

#include "emobench/adapter.hpp"
#include "emobench/container.hpp"
#include "test_util.hpp"

using namespace emobench;

namespace {

// Fixture: container-format exchange files with a known majority class.
struct Exchange {
  test_util::TempDir tmp{"adapter"};
  AdapterPaths paths;
  std::vector<int> train_labels = {0, 0, 0, 1, 1, 2, 0, 1};  // majority = 0
  std::vector<int> test_labels = {0, 1, 0, 2, 0};
  int dim = 3;

  Exchange() {
    paths.train_features = tmp.path() / "train_features.ebc";
    paths.train_labels = tmp.path() / "train_labels.ebc";
    paths.val_features = tmp.path() / "val_features.ebc";
    paths.val_labels = tmp.path() / "val_labels.ebc";
    paths.test_features = tmp.path() / "test_features.ebc";

    write_features(paths.train_features, train_labels.size());
    write_labels(paths.train_labels, train_labels);
    write_features(paths.val_features, 4);
    write_labels(paths.val_labels, {0, 1, 2, 0});
    write_features(paths.test_features, test_labels.size());
  }

  void write_features(const std::filesystem::path& path, std::size_t n) const {
    write_container(path,
                    MatrixF(test_util::random_matrix(dim, static_cast<int>(n), 3).cast<float>()),
                    0.0);
  }
  static void write_labels(const std::filesystem::path& path, const std::vector<int>& y) {
    MatrixF labels(1, static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
      labels(0, static_cast<Eigen::Index>(i)) = static_cast<float>(y[i]);
    }
    write_container(path, labels, 0.0);
  }
};

AdapterConfig adapter(const std::string& command, double timeout = 20.0) {
  AdapterConfig config;
  config.command = command;
  config.timeout_seconds = timeout;
  return config;
}

}  // namespace

TEST_CASE("bundled majority adapter completes the protocol") {
  Exchange ex;
  WireCapture capture;
  const AdapterRunResult r =
      adapter_run(adapter(MAJORITY_ADAPTER_BIN), Task::SubjectDependent, 3, ex.dim, 42,
                  ex.paths, static_cast<int>(ex.test_labels.size()), &capture);

  // Majority class of the training labels is 0; recount oracle on test labels.
  int zeros = 0;
  for (int y : ex.test_labels) {
    if (y == 0) ++zeros;
  }
  REQUIRE(r.predictions.size() == ex.test_labels.size());
  for (int p : r.predictions) CHECK(p == 0);
  int correct = 0;
  for (std::size_t i = 0; i < ex.test_labels.size(); ++i) {
    if (r.predictions[i] == ex.test_labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(ex.test_labels.size()) ==
        doctest::Approx(static_cast<double>(zeros) / static_cast<double>(ex.test_labels.size())));

  // The adapter reported one epoch; the checkpoint rule picked it.
  CHECK(r.run.epochs.size() == 1);
  CHECK(r.run.selected_epoch == 0);
}

TEST_CASE("test labels never cross the adapter boundary") {
  Exchange ex;
  WireCapture capture;
  adapter_run(adapter(MAJORITY_ADAPTER_BIN), Task::SubjectDependent, 3, ex.dim, 42, ex.paths,
              static_cast<int>(ex.test_labels.size()), &capture);

  // Outbound traffic references the test features path but never any label
  // content for the test set; the engine also never wrote a test-labels file.
  CHECK(!capture.sent.empty());
  for (const std::string& line : capture.sent) {
    CHECK(line.find("test_labels") == std::string::npos);
  }
  bool mentions_test_features = false;
  for (const std::string& line : capture.sent) {
    if (line.find("test_features.ebc") != std::string::npos) mentions_test_features = true;
  }
  CHECK(mentions_test_features);
  CHECK(!std::filesystem::exists(ex.tmp.path() / "test_labels.ebc"));
}

TEST_CASE("wrong-length prediction arrays raise ProtocolViolation") {
  Exchange ex;
  try {
    adapter_run(adapter(std::string(MISBEHAVING_ADAPTER_BIN) + " wrong-length"),
                Task::SubjectDependent, 3, ex.dim, 1, ex.paths,
                static_cast<int>(ex.test_labels.size()), nullptr);
    FAIL("expected ProtocolViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProtocolViolation);
  }
}

TEST_CASE("unparseable replies raise ProtocolViolation") {
  Exchange ex;
  try {
    adapter_run(adapter(std::string(MISBEHAVING_ADAPTER_BIN) + " garbage"),
                Task::SubjectDependent, 3, ex.dim, 1, ex.paths,
                static_cast<int>(ex.test_labels.size()), nullptr);
    FAIL("expected ProtocolViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProtocolViolation);
  }
}

TEST_CASE("a hung adapter raises Timeout after the deadline") {
  Exchange ex;
  try {
    adapter_run(adapter(std::string(MISBEHAVING_ADAPTER_BIN) + " hang", 0.5),
                Task::SubjectDependent, 3, ex.dim, 1, ex.paths,
                static_cast<int>(ex.test_labels.size()), nullptr);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }
}

TEST_CASE("an adapter dying mid-handshake raises NonZeroExit with its stderr tail") {
  Exchange ex;
  try {
    adapter_run(adapter(std::string(MISBEHAVING_ADAPTER_BIN) + " die-early"),
                Task::SubjectDependent, 3, ex.dim, 1, ex.paths,
                static_cast<int>(ex.test_labels.size()), nullptr);
    FAIL("expected NonZeroExit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonZeroExit);
    CHECK(std::string(e.what()).find("dying on purpose") != std::string::npos);
  }
}

TEST_CASE("a non-zero exit after the protocol is reported") {
  Exchange ex;
  try {
    adapter_run(adapter(std::string(MISBEHAVING_ADAPTER_BIN) + " bad-exit"),
                Task::SubjectDependent, 3, ex.dim, 1, ex.paths,
                static_cast<int>(ex.test_labels.size()), nullptr);
    FAIL("expected NonZeroExit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonZeroExit);
  }
}
