#include "emobench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace emobench {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string cell(const MeanStd& m) { return fixed(m.mean, 2) + " (" + fixed(m.stdev, 2) + ")"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

// Indices of the best and second-best value in a column (-1 when absent).
std::pair<int, int> best_two(const std::vector<double>& values) {
  int best = -1, second = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) {
      second = best;
      best = static_cast<int>(i);
    } else if (second < 0 || values[i] > values[static_cast<std::size_t>(second)]) {
      second = static_cast<int>(i);
    }
  }
  return {best, second};
}

}  // namespace

std::vector<MethodSummary> summarize(const EvalReport& report) {
  std::vector<MethodSummary> out;
  for (const MethodResult& method : report.methods) {
    if (method.units.empty()) {
      throw Error(ErrorCode::EmptyInput, "method '" + method.method + "' has no units");
    }
    std::vector<double> acc, f1;
    acc.reserve(method.units.size());
    f1.reserve(method.units.size());
    for (const UnitMetric& u : method.units) {
      acc.push_back(u.metrics.accuracy * 100.0);
      f1.push_back(u.metrics.macro_f1 * 100.0);
    }
    MethodSummary s;
    s.method = method.method;
    s.accuracy_pct = aggregate(acc);
    s.macro_f1_pct = aggregate(f1);
    s.n_units = static_cast<int>(method.units.size());
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, double> report_rank_scores(const EvalReport& report) {
  std::map<std::string, std::vector<double>> table;
  for (const MethodSummary& s : summarize(report)) {
    table[s.method] = {s.accuracy_pct.mean, s.macro_f1_pct.mean};
  }
  return rank_scores(table, /*higher_is_better=*/true);
}

std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::filesystem::path& out_dir,
                                               ReportFormat format) {
  if (report.methods.empty()) {
    throw Error(ErrorCode::EmptyInput, "report holds no methods");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  const std::vector<MethodSummary> summaries = summarize(report);
  const std::map<std::string, double> ranks = report_rank_scores(report);
  const std::string task = task_name(report.task);

  std::vector<std::filesystem::path> emitted;

  if (format == ReportFormat::Csv || format == ReportFormat::Both) {
    // Aggregates: per seed and pooled over all seeds ("all").
    std::ostringstream csv;
    csv << "method,dataset,task,metric,mean,std,n_units,seed\n";
    for (const MethodResult& method : report.methods) {
      std::set<std::uint64_t> seeds;
      for (const UnitMetric& u : method.units) seeds.insert(u.seed);

      const char* metric_names[2] = {"accuracy", "macro_f1"};
      for (int metric = 0; metric < 2; ++metric) {
        auto value_of = [&](const UnitMetric& u) {
          return 100.0 * (metric == 0 ? u.metrics.accuracy : u.metrics.macro_f1);
        };
        for (std::uint64_t seed : seeds) {
          std::vector<double> values;
          for (const UnitMetric& u : method.units) {
            if (u.seed == seed) values.push_back(value_of(u));
          }
          const MeanStd agg = aggregate(values);
          csv << method.method << "," << report.dataset << "," << task << ","
              << metric_names[metric] << "," << fixed(agg.mean, 6) << ","
              << fixed(agg.stdev, 6) << "," << values.size() << "," << seed << "\n";
        }
        std::vector<double> values;
        for (const UnitMetric& u : method.units) values.push_back(value_of(u));
        const MeanStd agg = aggregate(values);
        csv << method.method << "," << report.dataset << "," << task << ","
            << metric_names[metric] << "," << fixed(agg.mean, 6) << ","
            << fixed(agg.stdev, 6) << "," << values.size() << ",all\n";
      }
    }
    write_file(out_dir / "report.csv", csv.str());
    emitted.push_back(out_dir / "report.csv");

    std::ostringstream units;
    units << "method,dataset,task,unit,seed,accuracy,macro_f1\n";
    for (const MethodResult& method : report.methods) {
      for (const UnitMetric& u : method.units) {
        units << method.method << "," << report.dataset << "," << task << "," << u.unit
              << "," << u.seed << "," << fixed(u.metrics.accuracy * 100.0, 6) << ","
              << fixed(u.metrics.macro_f1 * 100.0, 6) << "\n";
      }
    }
    write_file(out_dir / "units.csv", units.str());
    emitted.push_back(out_dir / "units.csv");

    std::ostringstream rank_csv;
    rank_csv << "method,dataset,task,rank_sum_score\n";
    for (const auto& [method, score] : ranks) {
      rank_csv << method << "," << report.dataset << "," << task << "," << fixed(score, 2)
               << "\n";
    }
    write_file(out_dir / "ranks.csv", rank_csv.str());
    emitted.push_back(out_dir / "ranks.csv");
  }

  if (format == ReportFormat::Markdown || format == ReportFormat::Both) {
    std::vector<double> acc_col, f1_col;
    for (const MethodSummary& s : summaries) {
      acc_col.push_back(s.accuracy_pct.mean);
      f1_col.push_back(s.macro_f1_pct.mean);
    }
    const auto [acc_best, acc_second] = best_two(acc_col);
    const auto [f1_best, f1_second] = best_two(f1_col);

    auto decorate = [&](const std::string& text, int index, int best, int second) {
      if (index == best) return "**" + text + "**";
      if (index == second && acc_col.size() > 1) return "<u>" + text + "</u>";
      return text;
    };

    std::ostringstream md;
    md << "# Benchmark report: " << report.dataset << " (" << task << ")\n\n";
    md << "Mean and standard deviation of accuracy (%) and macro-F1 (%) per method; "
       << "best in bold, second best underlined. Aggregation unit: "
       << report.aggregation_unit << ".\n\n";
    md << "| Method | ACC | F1 | units |\n";
    md << "| --- | --- | --- | --- |\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      const MethodSummary& s = summaries[i];
      md << "| " << s.method << " | "
         << decorate(cell(s.accuracy_pct), static_cast<int>(i), acc_best, acc_second)
         << " | "
         << decorate(cell(s.macro_f1_pct), static_cast<int>(i), f1_best, f1_second)
         << " | " << s.n_units << " |\n";
    }

    md << "\n## Rank-sum scores\n\n";
    md << "Best value per metric earns n points down to 1; ties share the mean of the "
       << "spanned ranks.\n\n";
    md << "| Method | Score |\n| --- | --- |\n";
    // Highest score first; name breaks ties.
    std::vector<std::pair<std::string, double>> ordered(ranks.begin(), ranks.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [method, score] : ordered) {
      md << "| " << method << " | " << fixed(score, 2) << " |\n";
    }
    write_file(out_dir / "report.md", md.str());
    emitted.push_back(out_dir / "report.md");
  }

  return emitted;
}

}  // namespace emobench
