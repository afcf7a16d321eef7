// Evaluation metrics: Wasserstein-2 to target, path energy against the
// straight-line oracle, and the theory-derived value-function diagnostics.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vdt/trainer.hpp"
#include "vdt/valuenet.hpp"

namespace vdt {

struct MetricsReport {
    double w2_to_target = 0.0;
    double path_energy_mean = 0.0;
    double oracle_path_energy = 0.0;
    double bellman_residual = 0.0;
    double dual_feasibility_gap = 0.0;
    int n = 0;
    int h_test = 0;
    uint64_t seed = 0;

    std::string to_json_string() const;
};

// sqrt(mean squared Hungarian-matched distance); the 1/2 factor is omitted.
double eval_w2(const Points& generated, const Points& target_fresh);

// Mean over samples of sum_h ((H_test+1)/2) |X_{h+1} - X_h|^2. `trajectory`
// holds H_test+2 state sets of n points each.
double path_energy(const std::vector<Points>& trajectory, int h_test);

// (1/2) mean squared matched distance under the Hungarian coupling: the
// straight-line transport cost between the fresh sample clouds.
double oracle_path_energy(const Points& source_fresh, const Points& target_fresh);

// Mean over levels h = 0..H and probe states x at level h of
//   | V(x, t_h) - min_y { c(x,y) + V(y, t_{h+1}) } |,
// minimizing over the first `candidate_set_size` probes of level h+1 plus the
// policy image of x. `probe_states` holds H+2 levels.
double bellman_residual(const ValueField& v, const std::vector<Points>& probe_states, int horizon,
                        int candidate_set_size, int label = -1);

// max(0, max_i V(x_i, t_{level_i}) - c(x_i, y_i) - V(y_i, t_{level_i + 1})).
double dual_feasibility_gap(const ValueField& v, const Points& xs, const Points& ys,
                            const std::vector<int>& levels, int horizon, int label = -1);

// Probe construction from a retained generation trajectory: per level, up to
// m states from seeded-chosen trajectories.
std::vector<Points> probes_from_trajectory(const std::vector<Points>& trajectory, int m,
                                           uint64_t seed);

// Feasibility probe pairs: consecutive policy states plus seeded cross pairs.
void feasibility_pairs_from_trajectory(const std::vector<Points>& trajectory, int m_consecutive,
                                       int m_cross, uint64_t seed, Points& xs, Points& ys,
                                       std::vector<int>& levels);

// Full evaluation protocol: fresh seeded source and target batches of size n,
// generation at h_test (reverse swaps the roles of the two sides), then all
// report fields. The diagnostics are computed on probes drawn from the
// generated trajectories.
MetricsReport evaluate_model(const ValueNetwork& net, const TrainConfig& config, int h_test, int n,
                             uint64_t seed, bool reverse = false);

}  // namespace vdt
