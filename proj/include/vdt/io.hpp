// Atomic file writes and the CSV point formats.
#pragma once

#include <string>
#include <vector>

#include "vdt/valuenet.hpp"  // Points

namespace vdt {

// Writes to <path>.tmp and renames; a failed run leaves no partial output.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

// Header `x0,x1[,label]`, one row per point.
std::string points_csv(const Points& points, const std::vector<int>& labels);
void write_points_csv(const std::string& path, const Points& points,
                      const std::vector<int>& labels = {});

// Header `i,h,x0,x1`: trajectory step h of sample i.
void write_trajectories_csv(const std::string& path, const std::vector<Points>& steps);

}  // namespace vdt
