#include "vdt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vdt/errors.hpp"

namespace vdt {

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string points_csv(const Points& points, const std::vector<int>& labels) {
    const bool with_labels = !labels.empty();
    if (with_labels && labels.size() != static_cast<size_t>(points.rows())) {
        throw InputError("points_csv: label count mismatch");
    }
    std::string out;
    out.reserve(static_cast<size_t>(points.rows()) * 48 + 16);
    out += with_labels ? "x0,x1,label\n" : "x0,x1\n";
    char buf[160];
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (with_labels) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", points(i, 0), points(i, 1),
                          labels[static_cast<size_t>(i)]);
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", points(i, 0), points(i, 1));
        }
        out += buf;
    }
    return out;
}

void write_points_csv(const std::string& path, const Points& points,
                      const std::vector<int>& labels) {
    atomic_write_file(path, points_csv(points, labels));
}

void write_trajectories_csv(const std::string& path, const std::vector<Points>& steps) {
    if (steps.empty()) throw InputError("write_trajectories_csv: no steps");
    std::string out = "i,h,x0,x1\n";
    const Eigen::Index n = steps.front().rows();
    out.reserve(static_cast<size_t>(n) * steps.size() * 48 + 16);
    char buf[160];
    for (Eigen::Index i = 0; i < n; ++i) {
        for (size_t h = 0; h < steps.size(); ++h) {
            std::snprintf(buf, sizeof(buf), "%lld,%zu,%.17g,%.17g\n", static_cast<long long>(i), h,
                          steps[h](i, 0), steps[h](i, 1));
            out += buf;
        }
    }
    atomic_write_file(path, out);
}

}  // namespace vdt
