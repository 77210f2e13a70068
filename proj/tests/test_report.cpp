#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "emobench/report.hpp"
#include "test_util.hpp"

using namespace emobench;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

EvalReport small_report() {
  EvalReport report;
  report.dataset = "synthetic";
  report.task = Task::SubjectDependent;
  report.aggregation_unit = "subject_session";

  MethodResult a;
  a.method = "alpha";
  a.units = {{"s00/ses0", 1, {0.9, 0.85}},
             {"s01/ses0", 1, {0.7, 0.65}},
             {"s00/ses0", 2, {0.8, 0.75}}};
  MethodResult b;
  b.method = "beta";
  b.units = {{"s00/ses0", 1, {0.5, 0.45}},
             {"s01/ses0", 1, {0.6, 0.55}},
             {"s00/ses0", 2, {0.4, 0.35}}};
  report.methods = {a, b};
  return report;
}

}  // namespace

TEST_CASE("cells format as mean (std) to two decimals in percent") {
  // Units 95.34, 95.34, 52.41 (%) -> mean 81.03, population std 20.24.
  EvalReport report;
  report.dataset = "fmt";
  report.task = Task::SubjectDependent;
  report.aggregation_unit = "subject_session";
  MethodResult m;
  m.method = "only";
  m.units = {{"u0", 1, {0.9534, 0.9534}},
             {"u1", 1, {0.9534, 0.9534}},
             {"u2", 1, {0.5241, 0.5241}}};
  report.methods = {m};

  test_util::TempDir tmp("report");
  emit_report(report, tmp.path(), ReportFormat::Markdown);
  const std::string md = slurp(tmp.path() / "report.md");
  CHECK(md.find("81.03 (20.24)") != std::string::npos);
}

TEST_CASE("single-method reports carry no second-best underline") {
  EvalReport report = small_report();
  report.methods.resize(1);
  test_util::TempDir tmp("report");
  emit_report(report, tmp.path(), ReportFormat::Markdown);
  const std::string md = slurp(tmp.path() / "report.md");
  CHECK(md.find("<u>") == std::string::npos);
  CHECK(md.find("**") != std::string::npos);  // the single method is still best
}

TEST_CASE("best is bold and second best underlined per column") {
  test_util::TempDir tmp("report");
  emit_report(small_report(), tmp.path(), ReportFormat::Markdown);
  const std::string md = slurp(tmp.path() / "report.md");
  CHECK(md.find("**80.00 (8.16)**") != std::string::npos);   // alpha accuracy
  CHECK(md.find("<u>50.00 (8.16)</u>") != std::string::npos);  // beta accuracy
}

TEST_CASE("emitting the same report twice is byte-identical") {
  test_util::TempDir tmp("report");
  emit_report(small_report(), tmp.path() / "a", ReportFormat::Both);
  emit_report(small_report(), tmp.path() / "b", ReportFormat::Both);
  for (const char* name : {"report.csv", "units.csv", "ranks.csv", "report.md"}) {
    CHECK(slurp(tmp.path() / "a" / name) == slurp(tmp.path() / "b" / name));
  }
}

TEST_CASE("summaries respect mean bounds and non-negative stds") {
  const EvalReport report = small_report();
  const std::vector<MethodSummary> summaries = summarize(report);
  REQUIRE(summaries.size() == report.methods.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const MethodSummary& s = summaries[i];
    CHECK(s.accuracy_pct.stdev >= 0.0);
    CHECK(s.macro_f1_pct.stdev >= 0.0);
    double lo = 101.0, hi = -1.0;
    for (const UnitMetric& u : report.methods[i].units) {
      lo = std::min(lo, u.metrics.accuracy * 100.0);
      hi = std::max(hi, u.metrics.accuracy * 100.0);
    }
    CHECK(s.accuracy_pct.mean >= lo);
    CHECK(s.accuracy_pct.mean <= hi);
  }
}

TEST_CASE("per-seed and pooled rows appear in the csv") {
  test_util::TempDir tmp("report");
  emit_report(small_report(), tmp.path(), ReportFormat::Csv);
  const std::string csv = slurp(tmp.path() / "report.csv");
  CHECK(csv.find("alpha,synthetic,subject_dependent,accuracy") != std::string::npos);
  CHECK(csv.find(",all\n") != std::string::npos);
  CHECK(csv.find(",1\n") != std::string::npos);
  CHECK(csv.find(",2\n") != std::string::npos);
}

TEST_CASE("rank scores from the report prefer the stronger method") {
  const auto ranks = report_rank_scores(small_report());
  CHECK(ranks.at("alpha") == doctest::Approx(4.0));  // best on both metrics, n=2
  CHECK(ranks.at("beta") == doctest::Approx(2.0));
}

TEST_CASE("empty reports are rejected") {
  EvalReport report;
  report.dataset = "empty";
  test_util::TempDir tmp("report");
  CHECK_THROWS_AS(emit_report(report, tmp.path()), Error);
}
