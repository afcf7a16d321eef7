// The primal-dual training loop: minibatch sampling, particle initialization,
// K primal descent steps, stochastic dual gradient, Adam ascent.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vdt/datasets.hpp"
#include "vdt/particles.hpp"
#include "vdt/valuenet.hpp"

namespace vdt {

struct TrainConfig {
    int horizon = 100;            // H
    int batch_size = 100;         // b
    int iterations = 20000;       // T
    int primal_steps = 5;         // K
    double primal_stepsize = 0.5;  // eta
    double noise_std = 1e-3;
    double dual_lr = 1e-4;  // gamma
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    CouplingMode coupling = CouplingMode::Ot;
    double cfg_uncond_prob = 0.0;
    uint64_t seed = 1;
    DatasetSpec source;
    DatasetSpec target{"moons", false};
    NetworkConfig network;
    int pool_size = 10000;  // training points sampled per side
    int eval_n = 10000;     // sample count for the CLI's post-training evaluation

    void validate() const;
};

struct TrainRecord {
    int iteration;
    double lagrangian;  // empirical Lagrangian after the primal steps
    double cost;        // mean transport cost of the cloud
    double residual;    // constraint residual of the cloud
    double grad_norm;   // |dual gradient|
    double seconds;     // wall-clock since training start
};

struct TrainLog {
    std::vector<TrainRecord> records;
    std::string to_csv() const;  // header iter,lagrangian,cost,residual,grad_norm,seconds
};

struct Checkpoint {
    int version = 1;
    ValueNetwork net;
    TrainConfig config;
    int iteration = 0;

    Checkpoint(ValueNetwork n, TrainConfig c, int iter)
        : net(std::move(n)), config(std::move(c)), iteration(iter) {}
};

struct TrainHooks {
    // Called after every dual update with the fresh record and network state.
    std::function<void(const TrainRecord&, const ValueNetwork&)> on_iteration;
};

struct TrainResult {
    Checkpoint checkpoint;
    TrainLog log;
};

// Stochastic gradient of the empirical Lagrangian with respect to the network
// parameters: per trajectory
//   [grad V(src, 0) - grad V(X_0^-, 0)] + [grad V(X_H^+, 1) - grad V(tgt, 1)]
//   + sum_{h=1..H} [grad V(X_{h-1}^+, t_h) - grad V(X_h^-, t_h)],
// averaged over trajectories. Interfaces whose two points coincide bit-exactly
// contribute exactly zero and are skipped.
// `value_terms` (optional) receives the Lagrangian's value-term sum
// (1/b) sum scales * V — the forward values fall out of the backward pass, so
// the training loop gets its per-iteration Lagrangian for free.
std::vector<double> dual_gradient(const ParticleCloud& cloud, const ValueNetwork& net,
                                  const Batch& batch, int horizon,
                                  double* value_terms = nullptr);

// Samples pools from the configured datasets and runs the loop.
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});
// Same loop over caller-provided pools (pool_size is ignored).
TrainResult train(const TrainConfig& config, const Sample& source_pool, const Sample& target_pool,
                  const TrainHooks& hooks = {});

// Versioned JSON checkpoint; load refuses unknown versions and parameter
// shapes that do not match the stored config.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vdt
