#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fairtree/error.hpp"
#include "fairtree/harness.hpp"
#include "fairtree/io.hpp"
#include "fairtree/metrics.hpp"

namespace fairtree {

inline constexpr std::array<const char*, 5> metric_names = {"autoc", "n_pareto", "n_unique", "n_unique_pareto",
                                                            "var_pairwise"};

inline double metric_value(const CurveMetrics& m, std::size_t k) {
  switch (k) {
    case 0: return m.autoc;
    case 1: return static_cast<double>(m.n_pareto);
    case 2: return static_cast<double>(m.n_unique);
    case 3: return static_cast<double>(m.n_unique_pareto);
    case 4: return m.var_pairwise;
  }
  throw Error("metric index out of range");
}

/// One report input. Experiment directories carry metrics.csv. A baseline
/// directory may instead hold only curve CSVs (any *.csv with gamma, auroc,
/// spd columns), whose metrics are computed here; dataset and method must
/// then be given.
struct ReportInput {
  fs::path dir;
  bool baseline = false;
  std::string dataset;
  std::string method;
};

struct MethodSamples {
  std::string dataset;
  std::string method;
  bool baseline = false;
  std::vector<CurveMetrics> holdouts;
};

inline MethodSamples load_report_input(const ReportInput& in) {
  if (!fs::is_directory(in.dir)) throw Error("report: '" + in.dir.string() + "' is not a directory");
  MethodSamples out{in.dataset, in.method, in.baseline, {}};
  const auto metrics = in.dir / "metrics.csv";
  if (fs::exists(metrics)) {
    for (auto& row : read_metrics_csv(metrics)) {
      if (out.dataset.empty()) out.dataset = row.dataset;
      if (out.method.empty()) out.method = row.method;
      if (row.dataset != out.dataset || row.method != out.method)
        if (in.dataset.empty() && in.method.empty())
          throw Error(metrics.string() + ": mixes several datasets or methods");
      out.holdouts.push_back(row.metrics);
    }
    return out;
  }
  if (in.dataset.empty() || in.method.empty())
    throw Error("report: '" + in.dir.string() + "' has no metrics.csv; dataset and method must be given");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in.dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("report: '" + in.dir.string() + "' holds neither metrics.csv nor curve CSVs");
  for (const auto& f : files) out.holdouts.push_back(evaluate_curve(read_curve_csv(f, in.method)));
  return out;
}

struct ReportCell {
  MetricSummary summary;
  bool best = false;
  bool star = false;
};

struct ReportRow {
  std::string dataset;
  std::string method;
  bool baseline = false;
  std::size_t n = 0;
  std::array<ReportCell, metric_names.size()> cells;
};

struct PairTest {
  std::string dataset;
  std::string metric;
  std::string method_a, method_b;
  WelchResult result;
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<PairTest> tests;
  std::vector<std::string> notes;
};

/// Per dataset and metric, the highest mean among non-baseline methods is
/// marked best (ties all marked). A best entry gets a star iff its Welch
/// p-value is below 0.05 against every other non-baseline method of the
/// dataset. Methods with fewer than two hold-outs suppress all tests of
/// their dataset.
inline Report build_report(const std::vector<MethodSamples>& inputs) {
  Report rep;
  std::vector<std::string> datasets;
  for (const auto& m : inputs) {
    if (m.holdouts.empty()) throw Error("report: method '" + m.method + "' has no hold-outs");
    if (std::find(datasets.begin(), datasets.end(), m.dataset) == datasets.end()) datasets.push_back(m.dataset);
  }
  for (const auto& ds : datasets) {
    std::vector<const MethodSamples*> group;
    for (const auto& m : inputs)
      if (m.dataset == ds) group.push_back(&m);
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b)
        if (group[a]->method == group[b]->method)
          throw Error("report: method '" + group[a]->method + "' listed twice for dataset '" + ds + "'");

    const std::size_t first = rep.rows.size();
    bool testable = true;
    for (const auto* m : group) {
      ReportRow row{ds, m->method, m->baseline, m->holdouts.size(), {}};
      for (std::size_t k = 0; k < metric_names.size(); ++k) {
        std::vector<double> v;
        for (const auto& h : m->holdouts) v.push_back(metric_value(h, k));
        row.cells[k].summary = summarize(v);
      }
      if (!m->baseline && m->holdouts.size() < 2) testable = false;
      rep.rows.push_back(std::move(row));
    }
    if (!testable)
      rep.notes.push_back("dataset '" + ds + "': fewer than two hold-outs for some method, p-values suppressed");

    std::vector<std::size_t> contenders;
    for (std::size_t i = first; i < rep.rows.size(); ++i)
      if (!rep.rows[i].baseline) contenders.push_back(i);
    if (contenders.empty()) continue;

    for (std::size_t k = 0; k < metric_names.size(); ++k) {
      double best = rep.rows[contenders.front()].cells[k].summary.mean;
      for (auto i : contenders) best = std::max(best, rep.rows[i].cells[k].summary.mean);
      for (auto i : contenders) rep.rows[i].cells[k].best = rep.rows[i].cells[k].summary.mean == best;
      if (!testable) continue;

      std::map<std::pair<std::size_t, std::size_t>, double> p;
      for (std::size_t a = 0; a < contenders.size(); ++a) {
        for (std::size_t b = a + 1; b < contenders.size(); ++b) {
          const auto ia = contenders[a], ib = contenders[b];
          std::vector<double> va, vb;
          for (const auto& h : group[ia - first]->holdouts) va.push_back(metric_value(h, k));
          for (const auto& h : group[ib - first]->holdouts) vb.push_back(metric_value(h, k));
          const auto r = welch_t_test(va, vb);
          p[{ia, ib}] = p[{ib, ia}] = r.p;
          rep.tests.push_back({ds, metric_names[k], rep.rows[ia].method, rep.rows[ib].method, r});
        }
      }
      for (auto i : contenders) {
        if (!rep.rows[i].cells[k].best || contenders.size() < 2) continue;
        bool all = true;
        for (auto j : contenders)
          if (j != i && !(p[{i, j}] < 0.05)) all = false;
        rep.rows[i].cells[k].star = all;
      }
    }
  }
  return rep;
}

inline void write_report_csv(const Report& rep, std::ostream& out) {
  out << "dataset,method,baseline,n";
  for (const auto* m : metric_names) out << ',' << m << "_mean," << m << "_std," << m << "_best," << m << "_star";
  out << '\n';
  for (const auto& r : rep.rows) {
    out << detail::csv_escape(r.dataset) << ',' << detail::csv_escape(r.method) << ',' << (r.baseline ? 1 : 0) << ','
        << r.n;
    for (const auto& c : r.cells)
      out << ',' << format_number(c.summary.mean) << ',' << format_number(c.summary.std) << ',' << (c.best ? 1 : 0)
          << ',' << (c.star ? 1 : 0);
    out << '\n';
  }
}

inline void write_pvalues_csv(const Report& rep, std::ostream& out) {
  out << "dataset,metric,method_a,method_b,t,df,p\n";
  for (const auto& t : rep.tests)
    out << detail::csv_escape(t.dataset) << ',' << t.metric << ',' << detail::csv_escape(t.method_a) << ','
        << detail::csv_escape(t.method_b) << ',' << format_number(t.result.t) << ',' << format_number(t.result.df)
        << ',' << format_number(t.result.p) << '\n';
}

/// Plain-text table: best values wrapped in [ ], significance as a trailing *.
inline void write_report_text(const Report& rep, std::ostream& out) {
  auto fmt = [](const ReportCell& c, std::size_t k) {
    char buf[64];
    const char* f = k == 4 ? "%.4f" : (k == 0 ? "%.3f" : "%.1f");
    char m[24], s[24];
    std::snprintf(m, sizeof m, f, c.summary.mean);
    std::snprintf(s, sizeof s, f, c.summary.std);
    std::snprintf(buf, sizeof buf, "%s%s%s%s +- %s", c.best ? "[" : "", m, c.best ? "]" : "", c.star ? "*" : "", s);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"dataset", "method"});
  for (const auto* m : metric_names) cells.back().push_back(m);
  for (const auto& r : rep.rows) {
    cells.push_back({r.dataset, r.method + (r.baseline ? " (baseline)" : "")});
    for (std::size_t k = 0; k < r.cells.size(); ++k) cells.back().push_back(fmt(r.cells[k], k));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i];
      if (i + 1 < row.size()) out << std::string(width[i] - row[i].size() + 2, ' ');
    }
    out << '\n';
  }
  for (const auto& n : rep.notes) out << "note: " << n << '\n';
}

}  // namespace fairtree
