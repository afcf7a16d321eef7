// Seeded generators for the 2D benchmark distributions and coupled minibatch
// construction.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdt/valuenet.hpp"  // Points

namespace vdt {

struct DatasetSpec {
    // One of: gaussian, moons, scurve, 8gauss, moons_src, 8gauss_tgt_scaled.
    std::string name = "gaussian";
    bool labels_enabled = false;

    void validate() const;
};

struct Sample {
    Points points;            // n x 2
    std::vector<int> labels;  // empty when the dataset has no labels
};

// Fully determined by (spec, seed); point i depends only on (seed, i).
Sample sample(const DatasetSpec& spec, int n, uint64_t seed);

enum class CouplingMode { Naive, Ot, Paired };

CouplingMode coupling_from_string(const std::string& s);
std::string to_string(CouplingMode m);

struct Batch {
    Points source_points;     // b x d
    Points target_points;     // b x d, row-aligned with source under the mode
    std::vector<int> labels;  // target labels when present
    CouplingMode coupling_mode = CouplingMode::Naive;
};

// Draws b source and b target points without replacement (seeded). `ot`
// reorders the drawn targets by a Hungarian matching on squared distances;
// `naive` keeps draw order; `paired` draws one index set shared by both
// pools, preserving their index alignment.
Batch make_batch(const Sample& source_pool, const Sample& target_pool, int b, CouplingMode mode,
                 uint64_t seed);

// Noiseless generator skeletons, exposed for tests.
// Outer arc: (cos t, sin t); inner arc: (1 - cos t, 0.5 - sin t); t in [0, pi].
Eigen::Vector2d moons_arc(bool outer, double t);
Eigen::Vector2d moons_transform(const Eigen::Vector2d& p);  // 3x - (1,1)
Eigen::Vector2d scurve_point(double u);                     // pre-noise, pre-scale
Eigen::Vector2d gauss8_mean(int component);                 // radius-5 circle

}  // namespace vdt
