#include "adda/eval/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adda {
namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, end);
}

std::string scores_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "# instances=" << report.instances << " config_hash=" << report.config_hash
      << " seed=" << report.seed << '\n';
  out << "class,precision,recall,f1\n";
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const ClassScores& s = report.per_class[k];
    out << report.labels.name(k) << ',' << format_number(s.precision) << ','
        << format_number(s.recall) << ',' << format_number(s.f1) << '\n';
  }
  out << "macro,,," << format_number(report.macro_f1) << '\n';
  return out.str();
}

std::string confusion_csv(const EvalReport& report, bool normalized) {
  const Confusion& c = report.confusion;
  const auto rates = c.normalized();
  std::ostringstream out;
  out << "gold";
  for (const auto& name : report.labels.names()) out << ',' << name;
  out << '\n';
  for (std::size_t g = 0; g < c.classes(); ++g) {
    out << report.labels.name(g);
    for (std::size_t p = 0; p < c.classes(); ++p) {
      out << ',';
      if (normalized) {
        out << format_number(rates[g][p]);
      } else {
        out << c.at(g, p);
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string summary_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  if (rows.empty()) return {};
  const LabelSet& labels = rows.front().second.labels;
  std::size_t name_width = 6;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::size_t col = 6;
  for (const auto& l : labels.names()) col = std::max(col, l.size());
  auto pad = [](const std::string& s, std::size_t w, bool left) {
    const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
    return left ? s + fill : fill + s;
  };

  std::ostringstream out;
  out << pad("System", name_width, true);
  for (const auto& l : labels.names()) out << "  " << pad(l, col, false);
  out << "  " << pad("Macro", col, false) << '\n';
  out << std::string(name_width + (labels.size() + 1) * (col + 2), '-') << '\n';
  for (const auto& [name, report] : rows) {
    if (report.labels != labels) {
      throw std::invalid_argument("summary_table: rows use different label sets");
    }
    out << pad(name, name_width, true);
    for (const ClassScores& s : report.per_class) {
      out << "  " << pad(fixed(100 * s.f1, 2), col, false);
    }
    out << "  " << pad(fixed(100 * report.macro_f1, 2), col, false) << '\n';
  }
  return out.str();
}

std::string series_csv(const std::vector<Series>& series, const std::string& x_label) {
  std::ostringstream out;
  out << x_label;
  for (const Series& s : series) out << ',' << s.name << "_mean," << s.name << "_se";
  out << '\n';
  if (series.empty()) return out.str();
  for (std::size_t i = 0; i < series.front().x.size(); ++i) {
    out << format_number(series.front().x[i]);
    for (const Series& s : series) {
      if (s.y.size() != series.front().x.size()) {
        throw std::invalid_argument("series_csv: series '" + s.name + "' has a different length");
      }
      out << ',' << format_number(s.y[i].mean) << ',' << format_number(s.y[i].se);
    }
    out << '\n';
  }
  return out.str();
}

std::string series_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;

  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i].mean - s.y[i].se);
      y_hi = std::max(y_hi, s.y[i].mean + s.y[i].se);
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  const double margin = std::max(1e-3, 0.05 * (y_hi - y_lo));
  y_lo -= margin;
  y_hi += margin;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << fixed(yv, 3) << "</text>\n";
    out << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << fixed(xv, 0) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 18
      << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    out << "<g class=\"series\" data-name=\"" << escape_xml(s.name) << "\" stroke=\"" << color
        << "\" fill=\"" << color << "\">\n";
    out << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i].mean);
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x = px(s.x[i]);
      out << "<line x1=\"" << x << "\" x2=\"" << x << "\" y1=\"" << py(s.y[i].mean - s.y[i].se)
          << "\" y2=\"" << py(s.y[i].mean + s.y[i].se) << "\"/>\n";
      out << "<circle cx=\"" << x << "\" cy=\"" << py(s.y[i].mean) << "\" r=\"3\"/>\n";
    }
    const double ly = kTop + 14 + 20.0 * static_cast<double>(si);
    out << "<line x1=\"" << kLeft + plot_w + 12 << "\" x2=\"" << kLeft + plot_w + 32
        << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4 << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w + 38 << "\" y=\"" << ly
        << "\" stroke=\"none\" fill=\"black\">" << escape_xml(s.name) << "</text>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw std::runtime_error("cannot create " + path.parent_path().string() + ": " +
                               ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  write_text(dir / "scores.csv", scores_csv(report));
  write_text(dir / "confusion.csv", confusion_csv(report, false));
  write_text(dir / "confusion_normalized.csv", confusion_csv(report, true));
}

}  // namespace adda
