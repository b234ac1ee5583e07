#pragma once

// SVG figures rendered from result CSVs. Output is a pure function of the
// table, so re-plotting produces identical bytes.

#include <string>
#include <string_view>

#include "cdm/csv.hpp"

namespace cdm {

enum class PlotKind { Sweep, Ablation, Anytime, Weights, Pcc };

std::string_view to_string(PlotKind kind);
PlotKind parse_plot_kind(std::string_view text);

/// Infers the figure kind from the header (ablation = sweep schema with a "top" variant).
PlotKind detect_plot_kind(const CsvTable& table);

/// Throws std::invalid_argument on an empty table or a schema mismatch.
std::string render_svg(const CsvTable& table, PlotKind kind);

}  // namespace cdm
