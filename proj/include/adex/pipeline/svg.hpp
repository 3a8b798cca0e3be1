#pragma once

#include <string>
#include <vector>

namespace adex::pipe {

struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "black";
    std::string label;
};

// Static line rendering (traces, loss curves).
void svg_line_plot(const std::string& path, const std::vector<SvgSeries>& series,
                   const std::string& title, const std::string& x_label,
                   const std::string& y_label, int width = 720, int height = 420);

// Static scatter rendering (posterior pair plots).
void svg_scatter_plot(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label, int width = 480, int height = 480);

}  // namespace adex::pipe
