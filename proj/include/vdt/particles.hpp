// Particle-cloud representation of the per-step occupancy measures and their
// noisy gradient-descent updates.
//
// Each time step h = 0..H holds b particle pairs (X_h^-, X_h^+). The chain
// identities X_h^+ = X_{h+1}^-, X_0^- = src, X_H^+ = tgt hold exactly at
// initialization and are afterwards only enforced through the dual updates.
#pragma once

#include <cstdint>
#include <vector>

#include "vdt/datasets.hpp"
#include "vdt/valuenet.hpp"

namespace vdt {

struct ParticleCloud {
    int horizon = 0;  // H
    int b = 0;        // trajectories
    int d = 0;

    Points minus;  // (H+1)*b x d, row h*b + i holds X_h^-(i)
    Points plus;   // (H+1)*b x d, row h*b + i holds X_h^+(i)
    Points src_anchor;  // b x d
    Points tgt_anchor;  // b x d
    std::vector<int> labels;  // per trajectory, empty when unconditional

    std::ptrdiff_t row(int h, int i) const { return static_cast<std::ptrdiff_t>(h) * b + i; }
};

struct CostEval {
    double value;
    Eigen::VectorXd grad_x;
    Eigen::VectorXd grad_y;
};

// c(x, y) = ((H+1)/2) |x - y|^2 with both partial gradients.
CostEval transport_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int horizon);

// Uniform linear interpolation of the coupled endpoints: knot j sits at
// src + (j/(H+1)) (tgt - src), X_h^- = knot_h, X_h^+ = knot_{h+1}. The shared
// knots are computed once so the chain identities hold bit-exactly.
ParticleCloud init_particles(const Batch& batch, int horizon);

// One simultaneous noisy gradient-descent step on all interior particles.
// The descent direction is the particle gradient of the empirical Lagrangian
// preconditioned by 1/(H+1):
//   X_h^- -= eta [ (X_h^- - X_h^+) - grad V(X_h^-, t_h)   / (H+1) ] + noise
//   X_h^+ -= eta [ (X_h^+ - X_h^-) + grad V(X_h^+, t_{h+1})/(H+1) ] + noise
// with t_h = h/(H+1). This keeps the stationary points of the unscaled
// update while making the stability limit on eta independent of H (the
// unscaled pair dynamics amplify by |1 - 2 eta (H+1)| per step). Endpoint
// particles X_0^- and X_H^+ stay frozen at the minibatch anchors.
// Noise is N(0, noise_std^2 I), keyed by (seed, side, h, i).
// Throws TrainingError when an update produces a non-finite coordinate.
void primal_step(ParticleCloud& cloud, const ValueNetwork& net, double eta, double noise_std,
                 int horizon, uint64_t seed);

// Minibatch Lagrangian: mean transport cost plus the telescoped value terms
//   (1/b) sum_i [ V(src_i, 0) - V(X_0^-, 0)
//               + sum_{h=1..H} V(X_{h-1}^+, t_h) - V(X_h^-, t_h)
//               + V(X_H^+, 1) - V(tgt_i, 1) ].
// Interfaces whose two points coincide bit-exactly contribute exactly zero.
double empirical_lagrangian(const ParticleCloud& cloud, const ValueNetwork& net,
                            const Batch& batch, int horizon);

// Mean over trajectories of the total transport cost sum_h c(X_h^-, X_h^+).
double mean_transport_cost(const ParticleCloud& cloud);

// Max over all chain identities of the Euclidean mismatch; 0 on a fresh cloud.
double constraint_residual(const ParticleCloud& cloud);

// Interface list used by the Lagrangian value terms and the dual gradient:
// per trajectory, (pos, neg) point pairs evaluated at embed row `level`
// (level = h, t = h/(H+1)). `pos` enters with +, `neg` with -.
struct ChainPair {
    const double* pos;
    const double* neg;
    int level;
    int label;
};
std::vector<ChainPair> chain_pairs(const ParticleCloud& cloud);

}  // namespace vdt
