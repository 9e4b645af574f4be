#pragma once

#include <span>
#include <string>
#include <vector>

#include "card/simulation.hpp"

namespace card {

/// Renders one SVG per (scenario cell group, metric): power and FDR against
/// the sample size, one line per method with a +/-1 SE band. Output bytes are
/// deterministic for identical input.
/// Returns the paths written, in deterministic order.
std::vector<std::string> render_metric_svgs(std::span<const MetricsRow> rows,
                                            const std::string& out_dir);

} // namespace card
