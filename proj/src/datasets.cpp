#include "vdt/datasets.hpp"

#include <cmath>

#include "vdt/assignment.hpp"
#include "vdt/errors.hpp"
#include "vdt/rng.hpp"

namespace vdt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kArcNoiseStd = 0.05;
constexpr double kGauss8Std = 0.1;

enum class DatasetKind { Gaussian, Moons, Scurve, Gauss8, MoonsScaled, Gauss8Scaled };

DatasetKind kind_of(const std::string& name) {
    if (name == "gaussian") return DatasetKind::Gaussian;
    if (name == "moons") return DatasetKind::Moons;
    if (name == "scurve") return DatasetKind::Scurve;
    if (name == "8gauss") return DatasetKind::Gauss8;
    if (name == "moons_src") return DatasetKind::MoonsScaled;
    if (name == "8gauss_tgt_scaled") return DatasetKind::Gauss8Scaled;
    throw ConfigError("unknown dataset name: " + name);
}

bool has_labels(DatasetKind k) { return k == DatasetKind::Gauss8 || k == DatasetKind::Gauss8Scaled; }

// Partial Fisher-Yates: first b entries of a seeded permutation of [0, n).
std::vector<int> draw_without_replacement(int n, int b, uint64_t key) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    RngStream rng(key);
    for (int i = 0; i < b; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(b);
    return idx;
}

}  // namespace

void DatasetSpec::validate() const {
    const DatasetKind k = kind_of(name);
    if (labels_enabled && !has_labels(k)) {
        throw ConfigError("dataset " + name + " has no labels");
    }
}

Eigen::Vector2d moons_arc(bool outer, double t) {
    if (outer) return {std::cos(t), std::sin(t)};
    return {1.0 - std::cos(t), 0.5 - std::sin(t)};
}

Eigen::Vector2d moons_transform(const Eigen::Vector2d& p) {
    return {3.0 * p.x() - 1.0, 3.0 * p.y() - 1.0};
}

Eigen::Vector2d scurve_point(double u) {
    const double t = 3.0 * kPi * (u - 0.5);
    const double sgn = t >= 0.0 ? 1.0 : -1.0;
    return {std::sin(t), sgn * (std::cos(t) - 1.0)};
}

Eigen::Vector2d gauss8_mean(int component) {
    const double angle = component * kPi / 4.0;
    return {5.0 * std::cos(angle), 5.0 * std::sin(angle)};
}

Sample sample(const DatasetSpec& spec, int n, uint64_t seed) {
    spec.validate();
    if (n < 1) throw InputError("sample: n must be >= 1");
    const DatasetKind k = kind_of(spec.name);

    Sample out;
    out.points.resize(n, 2);
    if (spec.labels_enabled) out.labels.resize(n);

    const int n_outer = n / 2;  // moons: first half outer arc, rest inner
    for (int i = 0; i < n; ++i) {
        RngStream rng(mix(seed, 0xDA7A, static_cast<uint64_t>(i)));
        Eigen::Vector2d p;
        int label = -1;
        switch (k) {
            case DatasetKind::Gaussian:
                p = {rng.next_gaussian(), rng.next_gaussian()};
                break;
            case DatasetKind::Moons:
            case DatasetKind::MoonsScaled: {
                const double t = rng.next_unit() * kPi;
                p = moons_arc(i < n_outer, t);
                p.x() += kArcNoiseStd * rng.next_gaussian();
                p.y() += kArcNoiseStd * rng.next_gaussian();
                p = moons_transform(p);
                if (k == DatasetKind::MoonsScaled) p *= 2.0;
                break;
            }
            case DatasetKind::Scurve: {
                p = scurve_point(rng.next_unit());
                p.x() += kArcNoiseStd * rng.next_gaussian();
                p.y() += kArcNoiseStd * rng.next_gaussian();
                p *= 1.5;
                break;
            }
            case DatasetKind::Gauss8:
            case DatasetKind::Gauss8Scaled: {
                label = static_cast<int>(rng.next_below(8));
                p = gauss8_mean(label);
                p.x() += kGauss8Std * rng.next_gaussian();
                p.y() += kGauss8Std * rng.next_gaussian();
                if (k == DatasetKind::Gauss8Scaled) p *= 2.0;
                break;
            }
        }
        out.points.row(i) = p.transpose();
        if (spec.labels_enabled) out.labels[i] = label;
    }
    return out;
}

CouplingMode coupling_from_string(const std::string& s) {
    if (s == "naive") return CouplingMode::Naive;
    if (s == "ot") return CouplingMode::Ot;
    if (s == "paired") return CouplingMode::Paired;
    throw ConfigError("unknown coupling mode: " + s);
}

std::string to_string(CouplingMode m) {
    switch (m) {
        case CouplingMode::Naive: return "naive";
        case CouplingMode::Ot: return "ot";
        case CouplingMode::Paired: return "paired";
    }
    return "?";
}

Batch make_batch(const Sample& source_pool, const Sample& target_pool, int b, CouplingMode mode,
                 uint64_t seed) {
    const int ns = static_cast<int>(source_pool.points.rows());
    const int nt = static_cast<int>(target_pool.points.rows());
    if (b < 1) throw InputError("make_batch: b must be >= 1");
    if (ns < b || nt < b) throw InputError("make_batch: pools must hold at least b points");
    if (source_pool.points.cols() != target_pool.points.cols()) {
        throw InputError("make_batch: pool dimensions differ");
    }
    if (mode == CouplingMode::Paired && ns != nt) {
        throw InputError("make_batch: paired mode requires index-aligned pools of equal length");
    }

    const int d = static_cast<int>(source_pool.points.cols());
    Batch batch;
    batch.coupling_mode = mode;
    batch.source_points.resize(b, d);
    batch.target_points.resize(b, d);

    const std::vector<int> src_idx = draw_without_replacement(ns, b, mix(seed, 0x500C));
    const std::vector<int> tgt_idx = mode == CouplingMode::Paired
                                         ? src_idx
                                         : draw_without_replacement(nt, b, mix(seed, 0x7A67));

    const bool with_labels = !target_pool.labels.empty();
    std::vector<int> drawn_labels;
    if (with_labels) drawn_labels.resize(b);
    Points drawn_targets(b, d);
    for (int i = 0; i < b; ++i) {
        batch.source_points.row(i) = source_pool.points.row(src_idx[i]);
        drawn_targets.row(i) = target_pool.points.row(tgt_idx[i]);
        if (with_labels) drawn_labels[i] = target_pool.labels[tgt_idx[i]];
    }

    if (mode == CouplingMode::Ot && b > 1) {
        CostMatrix cost;
        cost.n = b;
        cost.entries.resize(static_cast<size_t>(b) * b);
        for (int i = 0; i < b; ++i) {
            for (int j = 0; j < b; ++j) {
                cost.entries[static_cast<size_t>(i) * b + j] =
                    (batch.source_points.row(i) - drawn_targets.row(j)).squaredNorm();
            }
        }
        const Assignment coupling = hungarian_assign(cost);
        if (with_labels) batch.labels.resize(b);
        for (int i = 0; i < b; ++i) {
            batch.target_points.row(i) = drawn_targets.row(coupling.permutation[i]);
            if (with_labels) batch.labels[i] = drawn_labels[coupling.permutation[i]];
        }
    } else {
        batch.target_points = drawn_targets;
        if (with_labels) batch.labels = drawn_labels;
    }
    return batch;
}

}  // namespace vdt
