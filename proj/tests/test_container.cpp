#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "emobench/container.hpp"
#include "test_util.hpp"

using namespace emobench;

TEST_CASE("write then read round-trips bit-exactly") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "roundtrip.ebc";

  std::mt19937 gen(99);
  std::uniform_real_distribution<float> dist(-100.0f, 100.0f);
  MatrixF data(4, 100);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 100; ++c) data(r, c) = dist(gen);
  }

  write_container(path, data, 200.0);
  ContainerHeader header;
  const MatrixF back = read_container(path, &header);

  CHECK(header.channels == 4);
  CHECK(header.samples == 100);
  CHECK(header.sample_rate_hz == doctest::Approx(200.0));
  REQUIRE(back.rows() == data.rows());
  REQUIRE(back.cols() == data.cols());
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 100; ++c) {
      CHECK(std::bit_cast<std::uint32_t>(back(r, c)) ==
            std::bit_cast<std::uint32_t>(data(r, c)));
    }
  }
}

TEST_CASE("file truncated by one byte raises TruncatedPayload") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "trunc.ebc";
  write_container(path, MatrixF::Ones(2, 10), 100.0);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 1);

  try {
    read_container(path);
    FAIL("expected TruncatedPayload");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncatedPayload);
  }
}

TEST_CASE("payload containing one NaN raises NonFiniteSample") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "nan.ebc";
  write_container(path, MatrixF::Ones(2, 10), 100.0);

  // Patch one payload float to a NaN bit pattern.
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekp(32 + 5 * 4);
  const std::uint32_t nan_bits = 0x7fc00000u;
  f.write(reinterpret_cast<const char*>(&nan_bits), 4);
  f.close();

  try {
    read_container(path);
    FAIL("expected NonFiniteSample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteSample);
  }
}

TEST_CASE("writer rejects non-finite samples") {
  test_util::TempDir tmp("container");
  MatrixF data = MatrixF::Ones(2, 4);
  data(1, 2) = std::numeric_limits<float>::infinity();
  try {
    write_container(tmp.path() / "bad.ebc", data, 10.0);
    FAIL("expected NonFiniteSample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteSample);
  }
}

TEST_CASE("wrong magic raises BadMagic") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "notcontainer.ebc";
  std::ofstream(path) << "definitely not a container, but long enough to hold a header....";
  try {
    read_container(path);
    FAIL("expected BadMagic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMagic);
  }
}

TEST_CASE("csv fallback parses header and columns") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "signal.csv";
  std::ofstream(path) << "C1,C2\n1.0,4.0\n2.0,5.0\n3.0,6.0\n";

  std::vector<std::string> names;
  const MatrixF data = read_signal_csv(path, &names);
  CHECK(names == std::vector<std::string>{"C1", "C2"});
  REQUIRE(data.rows() == 2);
  REQUIRE(data.cols() == 3);
  CHECK(data(0, 0) == doctest::Approx(1.0));
  CHECK(data(1, 2) == doctest::Approx(6.0));
}

TEST_CASE("csv with ragged row is rejected") {
  test_util::TempDir tmp("container");
  const auto path = tmp.path() / "ragged.csv";
  std::ofstream(path) << "C1,C2\n1.0,2.0\n3.0\n";
  try {
    read_signal_csv(path);
    FAIL("expected ChannelCountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChannelCountMismatch);
  }
}
