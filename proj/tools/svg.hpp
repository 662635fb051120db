#pragma once

// Minimal SVG line plots for simulation traces.

#include <string>
#include <vector>

namespace petc::tools {

struct Series {
    std::string label;
    std::vector<double> t;
    std::vector<double> y;
    bool steps = false; // draw as a zero-order hold
};

/// One panel per entry of `panels`; all panels share the time axis.
[[nodiscard]] std::string render_svg(const std::string& title,
                                     const std::vector<std::vector<Series>>& panels);

} // namespace petc::tools
