#include "droplet/svg.hpp"

#include "droplet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace droplet {

namespace {

constexpr double width = 640, height = 480;
constexpr double left = 80, right = 30, top = 50, bottom = 60;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
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

} // namespace

std::string render_loglog_svg(const LogLogPlot& plot) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < plot.x.size() && i < plot.y.size(); ++i) {
        if (plot.x[i] > 0.0 && plot.y[i] > 0.0) {
            lx.push_back(std::log10(plot.x[i]));
            ly.push_back(std::log10(plot.y[i]));
        }
    }
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!lx.empty()) {
        x0 = std::floor(*std::min_element(lx.begin(), lx.end()) * 10) / 10;
        x1 = std::ceil(*std::max_element(lx.begin(), lx.end()) * 10) / 10;
        y0 = std::floor(*std::min_element(ly.begin(), ly.end()) * 10) / 10;
        y1 = std::ceil(*std::max_element(ly.begin(), ly.end()) * 10) / 10;
        if (x1 - x0 < 0.2) { x0 -= 0.1; x1 += 0.1; }
        if (y1 - y0 < 0.2) { y0 -= 0.1; y1 += 0.1; }
    }
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto sy = [&](double v) { return top + (y1 - v) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << fmt(width / 2) << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << escape(plot.title) << "</text>\n";
    o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int k = 0; k <= 4; ++k) {
        const double vx = x0 + (x1 - x0) * k / 4, vy = y0 + (y1 - y0) * k / 4;
        o << "<line x1=\"" << fmt(sx(vx)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(sx(vx)) << "\" y2=\""
          << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << fmt(sx(vx)) << "\" y=\"" << fmt(top + ph + 20)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << label(std::pow(10.0, vx))
          << "</text>\n";
        o << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(sy(vy)) << "\" x2=\"" << fmt(left) << "\" y2=\""
          << fmt(sy(vy)) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(vy) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << label(std::pow(10.0, vy))
          << "</text>\n";
    }
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 15)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << escape(plot.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
      << " transform=\"rotate(-90 18 " << fmt(top + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";

    if (plot.has_fit && !lx.empty()) {
        const double ln10 = std::log(10.0);
        auto fit_y = [&](double v) { return (plot.slope * v * ln10 + plot.intercept) / ln10; };
        o << "<line x1=\"" << fmt(sx(x0)) << "\" y1=\"" << fmt(sy(fit_y(x0))) << "\" x2=\"" << fmt(sx(x1)) << "\" y2=\""
          << fmt(sy(fit_y(x1))) << "\" stroke=\"#c03030\" stroke-width=\"1.5\"/>\n";
        o << "<text x=\"" << fmt(left + pw - 8) << "\" y=\"" << fmt(top + 18)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c03030\">slope "
          << label(plot.slope) << "</text>\n";
    }
    for (std::size_t i = 0; i < lx.size(); ++i) {
        o << "<circle cx=\"" << fmt(sx(lx[i])) << "\" cy=\"" << fmt(sy(ly[i])) << "\" r=\"4\" fill=\"#2050a0\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_loglog_svg(const std::filesystem::path& path, const LogLogPlot& plot) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << render_loglog_svg(plot);
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

} // namespace droplet
