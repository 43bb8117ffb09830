#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ppca/matrix.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Score scatter with loading rays from the origin (a biplot). Axis labels
/// carry the explained-variance percentages. Output is deterministic:
/// coordinates are rendered with fixed precision.
struct BiplotSpec {
    const Matrix* scores = nullptr;                 // n x d, centered
    const std::vector<std::uint8_t>* converged = nullptr;
    std::size_t col_x = 0;                          // score columns to draw
    std::size_t col_y = 1;
    Matrix rays;                                    // k x 2 loading endpoints
    std::vector<std::string> ray_labels;            // k labels
    std::string x_label;
    std::string y_label;
};

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

inline void write_biplot_svg(const BiplotSpec& spec, std::ostream& out) {
    const double width = 640.0, height = 480.0, margin = 56.0;
    const Matrix& scores = *spec.scores;

    double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
    auto extend = [&](double x, double y) {
        lo_x = std::min(lo_x, x);
        hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y);
        hi_y = std::max(hi_y, y);
    };
    for (std::size_t i = 0; i < scores.rows(); ++i)
        extend(scores(i, spec.col_x), scores(i, spec.col_y));
    for (std::size_t i = 0; i < spec.rays.rows(); ++i) extend(spec.rays(i, 0), spec.rays(i, 1));
    const double pad_x = 0.05 * std::max(hi_x - lo_x, 1e-12);
    const double pad_y = 0.05 * std::max(hi_y - lo_y, 1e-12);
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;

    auto sx = [&](double x) {
        return margin + (x - lo_x) / (hi_x - lo_x) * (width - 2.0 * margin);
    };
    auto sy = [&](double y) {
        return height - margin - (y - lo_y) / (hi_y - lo_y) * (height - 2.0 * margin);
    };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // Zero axes.
    out << "  <line x1=\"" << detail::fixed2(sx(lo_x)) << "\" y1=\"" << detail::fixed2(sy(0))
        << "\" x2=\"" << detail::fixed2(sx(hi_x)) << "\" y2=\"" << detail::fixed2(sy(0))
        << "\" stroke=\"#cccccc\"/>\n";
    out << "  <line x1=\"" << detail::fixed2(sx(0)) << "\" y1=\"" << detail::fixed2(sy(lo_y))
        << "\" x2=\"" << detail::fixed2(sx(0)) << "\" y2=\"" << detail::fixed2(sy(hi_y))
        << "\" stroke=\"#cccccc\"/>\n";

    for (std::size_t i = 0; i < spec.rays.rows(); ++i) {
        const double rx = spec.rays(i, 0), ry = spec.rays(i, 1);
        out << "  <line x1=\"" << detail::fixed2(sx(0)) << "\" y1=\"" << detail::fixed2(sy(0))
            << "\" x2=\"" << detail::fixed2(sx(rx)) << "\" y2=\"" << detail::fixed2(sy(ry))
            << "\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
        const std::string label =
            i < spec.ray_labels.size() ? spec.ray_labels[i] : std::to_string(i + 1);
        out << "  <text x=\"" << detail::fixed2(sx(rx)) << "\" y=\"" << detail::fixed2(sy(ry))
            << "\" font-size=\"11\" fill=\"#444444\">" << label << "</text>\n";
    }

    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const bool ok = !spec.converged || (*spec.converged)[i] != 0;
        out << "  <circle cx=\"" << detail::fixed2(sx(scores(i, spec.col_x))) << "\" cy=\""
            << detail::fixed2(sy(scores(i, spec.col_y)))
            << "\" r=\"3\" fill=\"" << (ok ? "#33669988" : "#cc333388") << "\"/>\n";
    }

    out << "  <text x=\"" << detail::fixed2(width / 2.0) << "\" y=\""
        << detail::fixed2(height - 14.0) << "\" text-anchor=\"middle\" font-size=\"13\">"
        << spec.x_label << "</text>\n";
    out << "  <text x=\"16\" y=\"" << detail::fixed2(height / 2.0)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << detail::fixed2(height / 2.0) << ")\">" << spec.y_label << "</text>\n";
    out << "</svg>\n";
}

}  // namespace ppca
