#include "vdt/svg.hpp"

#include <algorithm>
#include <cstdio>

#include "vdt/errors.hpp"
#include "vdt/io.hpp"

namespace vdt {

namespace {
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;
constexpr double kView = 800.0;
}  // namespace

void render_svg(const std::vector<PointGroup>& groups, const std::string& path) {
    if (groups.empty()) throw InputError("render_svg: at least one point group required");

    double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
    bool first = true;
    for (const auto& g : groups) {
        if (g.points.rows() == 0 || g.points.cols() != 2) {
            throw InputError("render_svg: groups must hold n x 2 points");
        }
        const double gx0 = g.points.col(0).minCoeff(), gx1 = g.points.col(0).maxCoeff();
        const double gy0 = g.points.col(1).minCoeff(), gy1 = g.points.col(1).maxCoeff();
        if (first) {
            min_x = gx0; max_x = gx1; min_y = gy0; max_y = gy1;
            first = false;
        } else {
            min_x = std::min(min_x, gx0); max_x = std::max(max_x, gx1);
            min_y = std::min(min_y, gy0); max_y = std::max(max_y, gy1);
        }
    }

    // Axis-equal: one scale for both axes, box centered, 5% margin.
    const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
    const double margin = 0.05 * span;
    const double scale = kView / (span + 2.0 * margin);
    const double cx = 0.5 * (min_x + max_x);
    const double cy = 0.5 * (min_y + max_y);

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
           "viewBox=\"0 0 800 800\">\n";
    out += "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
    char buf[256];
    for (size_t gi = 0; gi < groups.size(); ++gi) {
        const std::string color =
            groups[gi].color.empty() ? kPalette[gi % kPaletteSize] : groups[gi].color;
        std::snprintf(buf, sizeof(buf), "<g fill=\"%s\" fill-opacity=\"0.7\">\n", color.c_str());
        out += buf;
        const Points& p = groups[gi].points;
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            const double sx = kView / 2.0 + (p(i, 0) - cx) * scale;
            const double sy = kView / 2.0 - (p(i, 1) - cy) * scale;  // y up
            std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\"/>\n", sx, sy);
            out += buf;
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    atomic_write_file(path, out);
}

}  // namespace vdt
