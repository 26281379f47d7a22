#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace droplet {

struct LogLogPlot {
    std::string title;
    std::string x_label = "beta";
    std::string y_label;
    std::vector<double> x;
    std::vector<double> y;
    // Fitted line log y = slope log x + intercept; drawn when has_fit.
    bool has_fit = false;
    double slope = 0.0;
    double intercept = 0.0;
};

std::string render_loglog_svg(const LogLogPlot& plot);
void write_loglog_svg(const std::filesystem::path& path, const LogLogPlot& plot);

} // namespace droplet
