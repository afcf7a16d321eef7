#include "vdt/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdt/assignment.hpp"
#include "vdt/errors.hpp"
#include "vdt/rng.hpp"
#include "vdt/sampler.hpp"

namespace vdt {

std::string MetricsReport::to_json_string() const {
    nlohmann::json doc{{"w2_to_target", w2_to_target},
                       {"path_energy_mean", path_energy_mean},
                       {"oracle_path_energy", oracle_path_energy},
                       {"bellman_residual", bellman_residual},
                       {"dual_feasibility_gap", dual_feasibility_gap},
                       {"n", n},
                       {"H_test", h_test},
                       {"seed", seed}};
    return doc.dump(1);
}

double eval_w2(const Points& generated, const Points& target_fresh) {
    return empirical_w2(generated, target_fresh).first;
}

double path_energy(const std::vector<Points>& trajectory, int h_test) {
    if (static_cast<int>(trajectory.size()) != h_test + 2) {
        throw InputError("path_energy: expected H_test+2 state sets");
    }
    const Eigen::Index n = trajectory.front().rows();
    for (const Points& p : trajectory) {
        if (p.rows() != n) throw InputError("path_energy: ragged trajectory");
    }
    const double scale = 0.5 * (h_test + 1);
    double total = 0.0;
    for (int h = 0; h <= h_test; ++h) {
        total += scale * (trajectory[static_cast<size_t>(h) + 1] - trajectory[static_cast<size_t>(h)])
                             .rowwise()
                             .squaredNorm()
                             .sum();
    }
    return total / static_cast<double>(n);
}

double oracle_path_energy(const Points& source_fresh, const Points& target_fresh) {
    const auto [dist, coupling] = empirical_w2(source_fresh, target_fresh);
    (void)coupling;
    return 0.5 * dist * dist;
}

double bellman_residual(const ValueField& v, const std::vector<Points>& probe_states, int horizon,
                        int candidate_set_size, int label) {
    if (static_cast<int>(probe_states.size()) != horizon + 2) {
        throw InputError("bellman_residual: expected H+2 probe levels");
    }
    if (candidate_set_size < 1) throw InputError("bellman_residual: candidate set must be >= 1");
    for (const Points& p : probe_states) {
        if (p.rows() == 0) throw InputError("bellman_residual: empty probe level");
    }

    const double hp1 = horizon + 1;
    double total = 0.0;
    long count = 0;
    std::vector<int> labels_buf;
    Points grads;
    for (int h = 0; h <= horizon; ++h) {
        const Points& xs = probe_states[static_cast<size_t>(h)];
        const Points& next = probe_states[static_cast<size_t>(h) + 1];
        const int m = static_cast<int>(xs.rows());
        const int n_cand = std::min<int>(candidate_set_size, static_cast<int>(next.rows()));
        const double t_h = h / hp1;
        const double t_next = (h + 1) / hp1;

        if (label >= 0) labels_buf.assign(static_cast<size_t>(m), label);
        const int* lab = label >= 0 ? labels_buf.data() : nullptr;

        std::vector<double> v_x(static_cast<size_t>(m));
        v.value_batch(xs, t_h, lab, v_x.data());
        std::vector<double> v_next(static_cast<size_t>(n_cand));
        if (label >= 0) labels_buf.assign(static_cast<size_t>(n_cand), label);
        Points cand = next.topRows(n_cand);
        v.value_batch(cand, t_next, lab, v_next.data());

        // Policy image candidates.
        if (label >= 0) labels_buf.assign(static_cast<size_t>(m), label);
        v.grad_x_batch(xs, t_h, lab, grads);
        Points images = xs - grads / hp1;
        std::vector<double> v_img(static_cast<size_t>(m));
        v.value_batch(images, t_next, lab, v_img.data());

        for (int i = 0; i < m; ++i) {
            double best = 0.5 * hp1 * (xs.row(i) - images.row(i)).squaredNorm() +
                          v_img[static_cast<size_t>(i)];
            for (int c = 0; c < n_cand; ++c) {
                const double val = 0.5 * hp1 * (xs.row(i) - cand.row(c)).squaredNorm() +
                                   v_next[static_cast<size_t>(c)];
                best = std::min(best, val);
            }
            total += std::abs(v_x[static_cast<size_t>(i)] - best);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double dual_feasibility_gap(const ValueField& v, const Points& xs, const Points& ys,
                            const std::vector<int>& levels, int horizon, int label) {
    if (xs.rows() != ys.rows() || xs.rows() != static_cast<Eigen::Index>(levels.size())) {
        throw InputError("dual_feasibility_gap: pair count mismatch");
    }
    const double hp1 = horizon + 1;
    double gap = 0.0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        const int h = levels[static_cast<size_t>(i)];
        const double vx = v.value(xs.row(i).data(), h / hp1, label);
        const double vy = v.value(ys.row(i).data(), (h + 1) / hp1, label);
        const double c = 0.5 * hp1 * (xs.row(i) - ys.row(i)).squaredNorm();
        gap = std::max(gap, vx - c - vy);
    }
    return std::max(0.0, gap);
}

std::vector<Points> probes_from_trajectory(const std::vector<Points>& trajectory, int m,
                                           uint64_t seed) {
    if (trajectory.empty()) throw InputError("probes_from_trajectory: empty trajectory");
    const int n = static_cast<int>(trajectory.front().rows());
    const int take = std::min(m, n);
    RngStream rng(mix(seed, 0x940be5));
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < take; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    std::vector<Points> probes(trajectory.size());
    for (size_t h = 0; h < trajectory.size(); ++h) {
        probes[h].resize(take, trajectory[h].cols());
        for (int i = 0; i < take; ++i) probes[h].row(i) = trajectory[h].row(idx[static_cast<size_t>(i)]);
    }
    return probes;
}

void feasibility_pairs_from_trajectory(const std::vector<Points>& trajectory, int m_consecutive,
                                       int m_cross, uint64_t seed, Points& xs, Points& ys,
                                       std::vector<int>& levels) {
    const int n_levels = static_cast<int>(trajectory.size());
    if (n_levels < 2) throw InputError("feasibility_pairs: trajectory too short");
    const int n = static_cast<int>(trajectory.front().rows());
    const int d = static_cast<int>(trajectory.front().cols());
    RngStream rng(mix(seed, 0xfea5));

    const int total = m_consecutive + m_cross;
    xs.resize(total, d);
    ys.resize(total, d);
    levels.assign(static_cast<size_t>(total), 0);
    for (int k = 0; k < m_consecutive; ++k) {
        const int h = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_levels - 1)));
        const int i = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
        xs.row(k) = trajectory[static_cast<size_t>(h)].row(i);
        ys.row(k) = trajectory[static_cast<size_t>(h) + 1].row(i);
        levels[static_cast<size_t>(k)] = h;
    }
    for (int k = 0; k < m_cross; ++k) {
        const int h = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_levels - 1)));
        const int i = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
        const int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
        xs.row(m_consecutive + k) = trajectory[static_cast<size_t>(h)].row(i);
        ys.row(m_consecutive + k) = trajectory[static_cast<size_t>(h) + 1].row(j);
        levels[static_cast<size_t>(m_consecutive) + k] = h;
    }
}

MetricsReport evaluate_model(const ValueNetwork& net, const TrainConfig& config, int h_test, int n,
                             uint64_t seed, bool reverse) {
    const DatasetSpec& start_spec = reverse ? config.target : config.source;
    const DatasetSpec& goal_spec = reverse ? config.source : config.target;

    DatasetSpec start_unlabeled = start_spec;
    start_unlabeled.labels_enabled = false;
    DatasetSpec goal_unlabeled = goal_spec;
    goal_unlabeled.labels_enabled = false;

    const Sample start_fresh = sample(start_unlabeled, n, mix(seed, 0xe5a1));
    const Sample goal_fresh = sample(goal_unlabeled, n, mix(seed, 0xe5a2));

    GenerationConfig gcfg;
    gcfg.h_test = h_test;
    gcfg.n = n;
    gcfg.seed = seed;
    gcfg.keep_trajectory = true;
    GenerationResult gen = reverse ? generate_reverse(net, start_fresh.points, gcfg)
                                   : generate(net, start_fresh.points, gcfg);

    MetricsReport report;
    report.n = n;
    report.h_test = h_test;
    report.seed = seed;
    report.w2_to_target = eval_w2(gen.samples, goal_fresh.points);
    report.path_energy_mean = path_energy(gen.trajectory, h_test);
    report.oracle_path_energy = oracle_path_energy(start_fresh.points, goal_fresh.points);

    // Diagnostics probe the value function along the generated transport
    // paths. A reverse trajectory visits the time grid backwards, so flip it
    // before mapping trajectory steps onto value-function levels.
    std::vector<Points> traj = gen.trajectory;
    if (reverse) std::reverse(traj.begin(), traj.end());
    const std::vector<Points> probes = probes_from_trajectory(traj, 256, mix(seed, 0x9b0e));
    report.bellman_residual = bellman_residual(net, probes, h_test, 64);

    Points pair_x, pair_y;
    std::vector<int> pair_levels;
    feasibility_pairs_from_trajectory(traj, 512, 512, mix(seed, 0xfe21), pair_x, pair_y,
                                      pair_levels);
    report.dual_feasibility_gap = dual_feasibility_gap(net, pair_x, pair_y, pair_levels, h_test);
    return report;
}

}  // namespace vdt
