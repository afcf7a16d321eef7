// Exact linear-sum assignment on square cost matrices, used for minibatch OT
// couplings and for empirical Wasserstein-2 evaluation.
#pragma once

#include <utility>
#include <vector>

#include "vdt/valuenet.hpp"  // Points

namespace vdt {

struct CostMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major n x n

    double at(int i, int j) const { return entries[static_cast<size_t>(i) * n + j]; }
    void validate() const;  // finite square matrix
};

struct Assignment {
    std::vector<int> permutation;  // row i -> column permutation[i]
    double total_cost = 0.0;
};

// Minimum-cost perfect matching via shortest augmenting paths with dual
// potentials (O(n^3)). Ties are broken toward the lexicographically smallest
// optimal permutation by a refinement pass over the zero-reduced-cost edges.
Assignment hungarian_assign(const CostMatrix& cost);

// Exhaustive minimum over all n! permutations, same tie-break. Test oracle;
// n <= 9 only.
Assignment brute_force_assign(const CostMatrix& cost);

// W2 estimate between equal-size point clouds: builds squared-distance costs,
// matches them, and returns sqrt(mean squared matched distance) plus the
// coupling. The 1/2 cost factor is omitted, matching the evaluation protocol.
std::pair<double, Assignment> empirical_w2(const Points& a, const Points& b);

}  // namespace vdt
