#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "nacart/bench.hpp"
#include "nacart/theory.hpp"

namespace nacart {

enum class PlotKind {
  Box,   // relative scores per method
  Curve  // median and quartile band of r2 against n_train, one line per method
};

PlotKind parse_plot_kind(const std::string& s);

/// Self-contained static SVG.
void emit_svg(std::span<const RunRecord> records, std::ostream& os, PlotKind kind);
void emit_svg(std::span<const RunRecord> records, const std::string& path, PlotKind kind);

/// Risk curves against p, one panel per eta.
void emit_theory_svg(std::span<const TheoryPoint> points, std::ostream& os);

/// Quantile by linear interpolation between order statistics (type 7).
double quantile(std::vector<double> v, double q);

}  // namespace nacart
