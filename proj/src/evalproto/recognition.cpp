#include "dvgait/evalproto/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dvgait/gaitgen/corpus.hpp"

namespace dvgait::evalproto {

namespace {

std::vector<double> views_of(const std::vector<Embedding>& items) {
  std::set<double> views;
  for (const auto& e : items) views.insert(e.view_deg);
  return {views.begin(), views.end()};
}

std::string format_view(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void require_square(const RecognitionMatrix& m) {
  if (m.gallery_views != m.probe_views) throw std::invalid_argument("matrix is not square over matching views");
  if (m.cells.size() != m.gallery_views.size() * m.probe_views.size())
    throw std::invalid_argument("matrix cell count does not match its labels");
}

}  // namespace

Metric parse_metric(std::string_view text) {
  if (text == "euclidean") return Metric::euclidean;
  if (text == "cosine") return Metric::cosine;
  throw std::invalid_argument("unknown metric: " + std::string(text));
}

std::string_view metric_name(Metric metric) { return metric == Metric::euclidean ? "euclidean" : "cosine"; }

double distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding lengths differ");
  if (metric == Metric::euclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

RecognitionMatrix rank1_matrix(const std::vector<Embedding>& gallery, const std::vector<Embedding>& probe,
                               Metric metric) {
  RecognitionMatrix m;
  m.gallery_views = views_of(gallery);
  m.probe_views = views_of(probe);
  if (m.gallery_views.empty() || m.probe_views.empty()) throw std::invalid_argument("empty gallery or probe set");
  m.cells.assign(m.gallery_views.size() * m.probe_views.size(), 0.0);
  for (std::size_t r = 0; r < m.gallery_views.size(); ++r) {
    std::vector<const Embedding*> g;
    for (const auto& e : gallery)
      if (e.view_deg == m.gallery_views[r]) g.push_back(&e);
    for (std::size_t c = 0; c < m.probe_views.size(); ++c) {
      std::size_t total = 0, correct = 0;
      for (const auto& p : probe) {
        if (p.view_deg != m.probe_views[c]) continue;
        double best = std::numeric_limits<double>::infinity();
        const Embedding* match = nullptr;
        for (const auto* e : g) {
          const double d = distance(p.values, e->values, metric);
          if (d < best) {
            best = d;
            match = e;
          }
        }
        ++total;
        correct += match && match->subject == p.subject;
      }
      if (total == 0 || g.empty()) throw std::invalid_argument("empty recognition cell");
      m.at(r, c) = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
    }
  }
  return m;
}

std::vector<double> mean_excluding_identical(const RecognitionMatrix& matrix) {
  require_square(matrix);
  const std::size_t n = matrix.probe_views.size();
  if (n < 2) throw std::invalid_argument("need at least two views for cross-view means");
  std::vector<double> out(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r)
      if (r != c) out[c] += matrix.at(r, c);
    out[c] /= static_cast<double>(n - 1);
  }
  return out;
}

double diagonal_mean(const RecognitionMatrix& matrix) {
  require_square(matrix);
  double s = 0.0;
  for (std::size_t i = 0; i < matrix.probe_views.size(); ++i) s += matrix.at(i, i);
  return s / static_cast<double>(matrix.probe_views.size());
}

double row_mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("row_mean of an empty row");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

DeltaReport compare_runs(const RecognitionMatrix& dv, const RecognitionMatrix& og) {
  if (dv.gallery_views != og.gallery_views || dv.probe_views != og.probe_views)
    throw std::invalid_argument("compare_runs: view labels differ");
  DeltaReport report;
  report.views = dv.probe_views;
  for (std::size_t i = 0; i < dv.cells.size(); ++i) report.cells.push_back(dv.cells[i] - og.cells[i]);
  const auto dv_cols = mean_excluding_identical(dv);
  const auto og_cols = mean_excluding_identical(og);
  for (std::size_t c = 0; c < dv_cols.size(); ++c) report.per_probe.push_back(dv_cols[c] - og_cols[c]);
  report.dv_mean = row_mean(dv_cols);
  report.og_mean = row_mean(og_cols);
  report.overall = report.dv_mean - report.og_mean;
  for (std::size_t r = 0; r < dv.gallery_views.size(); ++r)
    for (std::size_t c = 0; c < dv.probe_views.size(); ++c)
      if (og.at(r, c) >= dv.at(r, c)) report.og_not_worse.emplace_back(dv.gallery_views[r], dv.probe_views[c]);
  return report;
}

void write_matrix_csv(const std::filesystem::path& path, const RecognitionMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "gallery\\probe";
  for (double v : matrix.probe_views) out << ',' << format_view(v);
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < matrix.gallery_views.size(); ++r) {
    out << format_view(matrix.gallery_views[r]);
    for (std::size_t c = 0; c < matrix.probe_views.size(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.2f", matrix.at(r, c));
      out << buf;
    }
    out << '\n';
  }
}

RecognitionMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  RecognitionMatrix m;
  std::string line, cell;
  std::getline(in, line);
  std::istringstream header(line);
  std::getline(header, cell, ',');
  if (cell != "gallery\\probe") throw std::runtime_error("unexpected matrix header in " + path.string());
  while (std::getline(header, cell, ',')) m.probe_views.push_back(std::stod(cell));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::getline(row, cell, ',');
    m.gallery_views.push_back(std::stod(cell));
    std::size_t n = 0;
    while (std::getline(row, cell, ',')) {
      m.cells.push_back(std::stod(cell));
      ++n;
    }
    if (n != m.probe_views.size()) throw std::runtime_error("ragged matrix row in " + path.string());
  }
  return m;
}

void write_summary_csv(const std::filesystem::path& path, const std::string& label,
                       const RecognitionMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto means = mean_excluding_identical(matrix);
  out << "run";
  for (double v : matrix.probe_views) out << ',' << format_view(v);
  out << ",mean\n" << label;
  char buf[32];
  for (double m : means) {
    std::snprintf(buf, sizeof buf, ",%.1f", m);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, ",%.1f\n", row_mean(means));
  out << buf;
}

void write_delta_csv(const std::filesystem::path& path, const DeltaReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t n = report.views.size();
  char buf[64];
  out << "gallery\\probe";
  for (double v : report.views) out << ',' << format_view(v);
  out << '\n';
  for (std::size_t r = 0; r * n < report.cells.size(); ++r) {
    out << format_view(report.views[r]);
    for (std::size_t c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof buf, ",%.2f", report.cells[r * n + c]);
      out << buf;
    }
    out << '\n';
  }
  out << "cross_view_delta";
  for (double d : report.per_probe) {
    std::snprintf(buf, sizeof buf, ",%.2f", d);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%zu", report.dv_mean, report.og_mean, report.overall,
                report.og_not_worse.size());
  out << "# dv_mean,og_mean,overall_delta,og_not_worse_cells\nsummary," << buf << '\n';
}

}  // namespace dvgait::evalproto
