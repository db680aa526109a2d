#pragma once
// CSV emit/ingest for score tables and training curves, plus a minimal
// self-contained SVG line chart (no plotting dependency).

#include "coins/interaction.hpp"
#include "coins/schema.hpp"

#include <string>
#include <utility>
#include <vector>

namespace coins {

// Columns: source,target,mg_score,sc_i,n_int,rate — rows sorted by sc_i
// descending (ties by target id ascending).
void write_score_csv(const std::string& path, const Schema& sch,
                     const ScoreTable& table);

using Curve = std::vector<std::pair<long, float>>;

// Two columns with the given header names.
void write_curve_csv(const std::string& path, const std::string& xname,
                     const std::string& yname, const Curve& curve);

// Reads a two-column CSV written by write_curve_csv (header skipped).
Curve read_curve_csv(const std::string& path);

// Standalone SVG polyline chart of one or more labeled curves.
struct SvgSeries {
  std::string label;
  Curve points;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series);

}  // namespace coins
