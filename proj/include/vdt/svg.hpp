// Minimal standalone SVG scatter output.
#pragma once

#include <string>
#include <vector>

#include "vdt/valuenet.hpp"  // Points

namespace vdt {

struct PointGroup {
    Points points;
    std::string color;  // empty = next palette entry
};

// Fixed 800x800 viewport, axis-equal scaling over the joint bounding box with
// a 5% margin, radius-2 circles. Palette (in order): #1f77b4 #ff7f0e #2ca02c
// #d62728 #9467bd #8c564b.
void render_svg(const std::vector<PointGroup>& groups, const std::string& path);

}  // namespace vdt
