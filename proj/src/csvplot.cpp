#include "coins/csvplot.hpp"

#include "coins/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace coins {

void write_score_csv(const std::string& path, const Schema& sch,
                     const ScoreTable& table) {
  ScoreTable sorted = table;
  std::sort(sorted.begin(), sorted.end(),
            [](const PairScore& a, const PairScore& b) {
              if (a.sc != b.sc) return a.sc > b.sc;
              return a.target < b.target;
            });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CoinsError("cannot write csv: " + path);
  out << "source,target,mg_score,sc_i,n_int,rate\n";
  for (const PairScore& r : sorted)
    out << sch.name(r.source) << "," << sch.name(r.target) << "," << r.mg
        << "," << r.sc << "," << r.n_int << "," << r.rate << "\n";
  if (!out) throw CoinsError("write failed: " + path);
}

void write_curve_csv(const std::string& path, const std::string& xname,
                     const std::string& yname, const Curve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CoinsError("cannot write csv: " + path);
  out << xname << "," << yname << "\n";
  for (const auto& [x, y] : curve) out << x << "," << y << "\n";
  if (!out) throw CoinsError("write failed: " + path);
}

Curve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CoinsError("cannot read csv: " + path);
  Curve curve;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw CoinsError(path + ":" + std::to_string(lineno) +
                       ": expected two comma-separated columns");
    try {
      curve.emplace_back(std::stol(line.substr(0, comma)),
                         std::stof(line.substr(comma + 1)));
    } catch (...) {
      throw CoinsError(path + ":" + std::to_string(lineno) +
                       ": malformed number");
    }
  }
  return curve;
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series) {
  const int W = 720, H = 440;
  const int ml = 70, mr = 20, mt = 40, mb = 50;  // margins
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const SvgSeries& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = static_cast<double>(x);
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, static_cast<double>(x));
        xmax = std::max(xmax, static_cast<double>(x));
        ymin = std::min(ymin, static_cast<double>(y));
        ymax = std::max(ymax, static_cast<double>(y));
      }
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  const double xs = (W - ml - mr) / (xmax - xmin);
  const double ys = (H - mt - mb) / (ymax - ymin);
  auto px = [&](double x) { return ml + (x - xmin) * xs; };
  auto py = [&](double y) { return H - mb - (y - ymin) * ys; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "' viewBox='0 0 " << W << " " << H << "'>\n";
  os << "<rect width='" << W << "' height='" << H << "' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
     << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";
  // axes
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr
     << "' y2='" << H - mb << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
     << H - mb << "' stroke='black'/>\n";
  // ticks (5 per axis)
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<line x1='" << px(xv) << "' y1='" << H - mb << "' x2='" << px(xv)
       << "' y2='" << H - mb + 5 << "' stroke='black'/>\n";
    os << "<text x='" << px(xv) << "' y='" << H - mb + 20
       << "' text-anchor='middle' font-family='sans-serif' "
          "font-size='11'>"
       << xv << "</text>\n";
    os << "<line x1='" << ml - 5 << "' y1='" << py(yv) << "' x2='" << ml
       << "' y2='" << py(yv) << "' stroke='black'/>\n";
    os << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
       << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
       << yv << "</text>\n";
  }
  os << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
     << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
     << xlabel << "</text>\n";
  os << "<text x='16' y='" << (mt + H - mb) / 2
     << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
     << "transform='rotate(-90 16 " << (mt + H - mb) / 2 << ")'>" << ylabel
     << "</text>\n";
  int ci = 0;
  for (const SvgSeries& s : series) {
    const char* color = kColors[ci % 6];
    os << "<polyline fill='none' stroke='" << color
       << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : s.points)
      os << px(static_cast<double>(x)) << "," << py(y) << " ";
    os << "'/>\n";
    os << "<text x='" << W - mr - 10 << "' y='" << mt + 16 * (ci + 1)
       << "' text-anchor='end' font-family='sans-serif' font-size='12' "
       << "fill='" << color << "'>" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CoinsError("cannot write svg: " + path);
  out << os.str();
  if (!out) throw CoinsError("write failed: " + path);
}

}  // namespace coins
