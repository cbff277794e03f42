#include "codeil/evaluation/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "codeil/error.h"
#include "codeil/evaluation/metrics.h"

namespace codeil::evaluation {
namespace {

constexpr double kWidth = 760, kHeight = 440;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

const char* Color(size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Maps data coordinates onto the plot rectangle.
struct Frame {
  double x0, x1, y0, y1;
  double X(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double Y(double y) const {
    if (!std::isfinite(y) || y > y1) y = y1;
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

double UpperLimit(double max_finite) {
  if (!(max_finite > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(max_finite)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= max_finite) return m * mag;
  }
  return 10.0 * mag;
}

void Header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << Fixed(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-size=\"15\">" << Escape(title) << "</text>\n";
}

void YAxis(std::ostringstream& os, const Frame& f, const std::string& label) {
  const double right = kWidth - kRight;
  for (int k = 0; k <= 5; ++k) {
    const double v = f.y0 + (f.y1 - f.y0) * k / 5.0;
    const std::string y = Fixed(f.Y(v));
    os << "<line x1=\"" << Fixed(kLeft) << "\" y1=\"" << y << "\" x2=\""
       << Fixed(right) << "\" y2=\"" << y << "\" stroke=\"#e0e0e0\"/>\n"
       << "<text x=\"" << Fixed(kLeft - 6) << "\" y=\"" << y
       << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << Tick(v)
       << "</text>\n";
  }
  os << "<rect x=\"" << Fixed(kLeft) << "\" y=\"" << Fixed(kTop)
     << "\" width=\"" << Fixed(right - kLeft) << "\" height=\""
     << Fixed(kHeight - kTop - kBottom)
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text transform=\"translate(18," << Fixed((kTop + kHeight - kBottom) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(label)
     << "</text>\n";
}

void Legend(std::ostringstream& os, const std::vector<std::string>& labels) {
  const double x = kWidth - kRight + 14;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 10 + 20.0 * i;
    os << "<rect x=\"" << Fixed(x) << "\" y=\"" << Fixed(y - 6)
       << "\" width=\"14\" height=\"12\" fill=\"" << Color(i) << "\"/>\n"
       << "<text x=\"" << Fixed(x + 20) << "\" y=\"" << Fixed(y)
       << "\" dominant-baseline=\"middle\">" << Escape(labels[i]) << "</text>\n";
  }
}

}  // namespace

int CsvTable::Column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing CSV column " + name);
  return static_cast<int>(it - header.begin());
}

double CsvTable::Number(size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(Column(name));
  try {
    size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("CSV column " + name + " has non-numeric value '" + cell + "'");
}

CsvTable ParseCsv(const std::string& text, const std::string& what) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line) || line.empty()) throw DataError(what + ": empty CSV");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw DataError(what + ": row " + std::to_string(table.rows.size() + 1) +
                      " has " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::string DeviationPlotSvg(const std::vector<CurveSeries>& series,
                             const std::string& title) {
  if (series.empty()) throw InvalidArgument("no curves to plot");
  size_t len = 1;
  double top = 0.0;
  for (const CurveSeries& s : series) {
    if (s.q25.size() != s.q50.size() || s.q75.size() != s.q50.size()) {
      throw InvalidArgument("quantile arrays differ in length for " + s.label);
    }
    len = std::max(len, s.q50.size());
    for (double v : s.q75) {
      if (std::isfinite(v)) top = std::max(top, v);
    }
  }
  const Frame f{0.0, std::max<double>(1.0, static_cast<double>(len - 1)), 0.0,
                UpperLimit(top)};
  std::ostringstream os;
  Header(os, title);
  YAxis(os, f, "state deviation");
  for (int k = 0; k <= 5; ++k) {
    const double v = f.x1 * k / 5.0;
    os << "<text x=\"" << Fixed(f.X(v)) << "\" y=\""
       << Fixed(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
       << Tick(std::round(v)) << "</text>\n";
  }
  os << "<text x=\"" << Fixed((kLeft + kWidth - kRight) / 2) << "\" y=\""
     << Fixed(kHeight - 12) << "\" text-anchor=\"middle\">step</text>\n";
  std::vector<std::string> labels;
  for (size_t i = 0; i < series.size(); ++i) {
    const CurveSeries& s = series[i];
    labels.push_back(s.label);
    if (s.q50.empty()) continue;
    os << "<polygon fill=\"" << Color(i) << "\" fill-opacity=\"0.2\" points=\"";
    for (size_t t = 0; t < s.q75.size(); ++t) {
      os << Fixed(f.X(t)) << ',' << Fixed(f.Y(s.q75[t])) << ' ';
    }
    for (size_t t = s.q25.size(); t-- > 0;) {
      os << Fixed(f.X(t)) << ',' << Fixed(f.Y(s.q25[t])) << ' ';
    }
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << Color(i)
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t t = 0; t < s.q50.size(); ++t) {
      os << Fixed(f.X(t)) << ',' << Fixed(f.Y(s.q50[t])) << ' ';
    }
    os << "\"/>\n";
  }
  Legend(os, labels);
  os << "</svg>\n";
  return os.str();
}

std::string RmseBoxSvg(const std::vector<BoxGroup>& groups,
                       const std::string& title) {
  if (groups.empty()) throw InvalidArgument("no boxes to plot");
  std::vector<std::string> series;
  std::vector<int> sizes;
  for (const BoxGroup& g : groups) {
    if (g.values.empty()) throw InvalidArgument("empty box for " + g.series);
    if (std::find(series.begin(), series.end(), g.series) == series.end()) {
      series.push_back(g.series);
    }
    if (std::find(sizes.begin(), sizes.end(), g.size) == sizes.end()) {
      sizes.push_back(g.size);
    }
  }
  std::sort(sizes.begin(), sizes.end());

  struct Box {
    double lo, q25, q50, q75, hi;
    int clipped;
  };
  std::vector<Box> boxes;
  double top = 0.0;
  for (const BoxGroup& g : groups) {
    Box b{};
    b.q25 = Quantile(g.values, 0.25);
    b.q50 = Quantile(g.values, 0.5);
    b.q75 = Quantile(g.values, 0.75);
    const double iqr = b.q75 - b.q25;
    b.lo = b.q50;
    b.hi = b.q50;
    for (double v : g.values) {
      if (!std::isfinite(v)) {
        ++b.clipped;
        continue;
      }
      if (v >= b.q25 - 1.5 * iqr) b.lo = std::min(b.lo, v);
      if (v <= b.q75 + 1.5 * iqr) b.hi = std::max(b.hi, v);
    }
    for (double v : {b.hi, b.q75}) {
      if (std::isfinite(v)) top = std::max(top, v);
    }
    boxes.push_back(b);
  }

  const double slot = 1.0 / static_cast<double>(series.size() + 1);
  const Frame f{0.0, static_cast<double>(sizes.size()), 0.0, UpperLimit(top)};
  std::ostringstream os;
  Header(os, title);
  YAxis(os, f, "rollout RMSE (rad)");
  for (size_t k = 0; k < sizes.size(); ++k) {
    os << "<text x=\"" << Fixed(f.X(k + 0.5)) << "\" y=\""
       << Fixed(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
       << sizes[k] << "</text>\n";
  }
  os << "<text x=\"" << Fixed((kLeft + kWidth - kRight) / 2) << "\" y=\""
     << Fixed(kHeight - 12)
     << "\" text-anchor=\"middle\">training trajectories</text>\n";
  for (size_t i = 0; i < groups.size(); ++i) {
    const BoxGroup& g = groups[i];
    const Box& b = boxes[i];
    const size_t si = std::find(series.begin(), series.end(), g.series) -
                      series.begin();
    const size_t xi = std::find(sizes.begin(), sizes.end(), g.size) -
                      sizes.begin();
    const double center = xi + slot * (si + 1);
    const double half = 0.35 * slot;
    const std::string x = Fixed(f.X(center));
    const char* color = Color(si);
    os << "<line x1=\"" << x << "\" y1=\"" << Fixed(f.Y(b.lo)) << "\" x2=\""
       << x << "\" y2=\"" << Fixed(f.Y(b.hi)) << "\" stroke=\"" << color
       << "\"/>\n<rect x=\"" << Fixed(f.X(center - half)) << "\" y=\""
       << Fixed(f.Y(b.q75)) << "\" width=\""
       << Fixed(f.X(center + half) - f.X(center - half)) << "\" height=\""
       << Fixed(std::max(0.0, f.Y(b.q25) - f.Y(b.q75))) << "\" fill=\""
       << color << "\" fill-opacity=\"0.3\" stroke=\"" << color
       << "\"/>\n<line x1=\"" << Fixed(f.X(center - half)) << "\" y1=\""
       << Fixed(f.Y(b.q50)) << "\" x2=\"" << Fixed(f.X(center + half))
       << "\" y2=\"" << Fixed(f.Y(b.q50)) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    if (b.clipped > 0) {
      os << "<text x=\"" << x << "\" y=\"" << Fixed(kTop - 4)
         << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"" << color
         << "\">" << b.clipped << " inf</text>\n";
    }
  }
  Legend(os, series);
  os << "</svg>\n";
  return os.str();
}

}  // namespace codeil::evaluation
