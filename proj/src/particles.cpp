#include "vdt/particles.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "vdt/errors.hpp"
#include "vdt/parallel.hpp"
#include "vdt/rng.hpp"

namespace vdt {

namespace {
constexpr uint64_t kNoiseMinusTag = 0x4e015e00;
constexpr uint64_t kNoisePlusTag = 0x4e015e01;
}  // namespace

CostEval transport_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int horizon) {
    if (x.size() != y.size()) throw InputError("transport_cost: dimension mismatch");
    if (horizon < 0) throw InputError("transport_cost: horizon must be >= 0");
    CostEval out;
    const Eigen::VectorXd diff = x - y;
    out.value = 0.5 * (horizon + 1) * diff.squaredNorm();
    out.grad_x = (horizon + 1) * diff;
    out.grad_y = -(horizon + 1) * diff;
    return out;
}

ParticleCloud init_particles(const Batch& batch, int horizon) {
    if (horizon < 0) throw InputError("init_particles: horizon must be >= 0");
    const int b = static_cast<int>(batch.source_points.rows());
    const int d = static_cast<int>(batch.source_points.cols());
    if (batch.target_points.rows() != b || batch.target_points.cols() != d) {
        throw InputError("init_particles: batch shape mismatch");
    }

    ParticleCloud cloud;
    cloud.horizon = horizon;
    cloud.b = b;
    cloud.d = d;
    cloud.src_anchor = batch.source_points;
    cloud.tgt_anchor = batch.target_points;
    cloud.labels = batch.labels;
    cloud.minus.resize(static_cast<Eigen::Index>(horizon + 1) * b, d);
    cloud.plus.resize(static_cast<Eigen::Index>(horizon + 1) * b, d);

    Eigen::RowVectorXd knot(d);
    for (int i = 0; i < b; ++i) {
        const auto src = batch.source_points.row(i);
        const auto tgt = batch.target_points.row(i);
        cloud.minus.row(cloud.row(0, i)) = src;
        cloud.plus.row(cloud.row(horizon, i)) = tgt;
        for (int j = 1; j <= horizon; ++j) {
            // Shared knot: written to both X_{j-1}^+ and X_j^- verbatim.
            knot = src + (static_cast<double>(j) / (horizon + 1)) * (tgt - src);
            cloud.plus.row(cloud.row(j - 1, i)) = knot;
            cloud.minus.row(cloud.row(j, i)) = knot;
        }
    }
    return cloud;
}

void primal_step(ParticleCloud& cloud, const ValueNetwork& net, double eta, double noise_std,
                 int horizon, uint64_t seed) {
    if (horizon != cloud.horizon) throw InputError("primal_step: horizon mismatch");
    if (net.input_dim() != cloud.d) throw InputError("primal_step: network dimension mismatch");
    if (!(eta > 0.0)) throw InputError("primal_step: stepsize must be positive");

    const int H = cloud.horizon;
    const int b = cloud.b;
    const int d = cloud.d;
    if (H == 0) return;  // both particles of the single pair are anchors

    const Points embeds = time_embed_table(H, net.config().time_embed_dim);
    const int ed = net.config().time_embed_dim;
    const bool conditional = net.conditional() && !cloud.labels.empty();

    // Value gradients at the movable particles, evaluated pre-update.
    // Movable minus particles are rows b..(H+1)b-1 (levels 1..H); movable plus
    // particles are rows 0..Hb-1 (levels 1..H as well, since X_h^+ sits at
    // t_{h+1}). Both sides therefore share the level pattern 1 + idx/b.
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(H) * b;
    Points gmin(m, d), gplus(m, d);
    std::vector<double> embed_buf;
    std::vector<int> label_buf;

    auto eval_side = [&](const Points& src_points, std::ptrdiff_t row_offset, Points& out) {
        parallel_for_blocks(m, [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
            const int count = static_cast<int>(end - begin);
            std::vector<double> eb(static_cast<size_t>(count) * ed);
            std::vector<int> lb;
            if (conditional) lb.resize(static_cast<size_t>(count));
            for (std::ptrdiff_t k = begin; k < end; ++k) {
                const int level = 1 + static_cast<int>(k / b);
                std::memcpy(eb.data() + (k - begin) * ed, embeds.row(level).data(),
                            sizeof(double) * ed);
                if (conditional) lb[static_cast<size_t>(k - begin)] = cloud.labels[k % b];
            }
            net.grad_input_batch(src_points.data() + (row_offset + begin) * d, count, eb.data(),
                                 false, conditional ? lb.data() : nullptr,
                                 out.data() + begin * d);
        });
    };
    eval_side(cloud.minus, b, gmin);     // X_h^- for h = 1..H at t_h
    eval_side(cloud.plus, 0, gplus);     // X_h^+ for h = 0..H-1 at t_{h+1}

    // Simultaneous update: every right-hand side reads pre-step state.
    const Points old_minus = cloud.minus;
    const Points old_plus = cloud.plus;
    const double inv_h1 = 1.0 / (H + 1);

    parallel_for_blocks(m, [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
        Eigen::RowVectorXd step(d);
        for (std::ptrdiff_t k = begin; k < end; ++k) {
            const int i = static_cast<int>(k % b);
            // minus side: level h = 1 + k/b, cloud row k + b
            {
                const std::ptrdiff_t r = k + b;
                step = (old_minus.row(r) - old_plus.row(r)) - inv_h1 * gmin.row(k);
                cloud.minus.row(r) -= eta * step;
                if (noise_std > 0.0) {
                    RngStream rng(mix(seed, kNoiseMinusTag, static_cast<uint64_t>(r)));
                    for (int c = 0; c < d; ++c) cloud.minus(r, c) += noise_std * rng.next_gaussian();
                }
                for (int c = 0; c < d; ++c) {
                    if (!std::isfinite(cloud.minus(r, c))) {
                        throw TrainingError("primal_step: non-finite X^- at h=" +
                                            std::to_string(1 + static_cast<int>(k / b)) +
                                            " i=" + std::to_string(i));
                    }
                }
            }
            // plus side: level h = k/b, cloud row k
            {
                const std::ptrdiff_t r = k;
                step = (old_plus.row(r) - old_minus.row(r)) + inv_h1 * gplus.row(k);
                cloud.plus.row(r) -= eta * step;
                if (noise_std > 0.0) {
                    RngStream rng(mix(seed, kNoisePlusTag, static_cast<uint64_t>(r)));
                    for (int c = 0; c < d; ++c) cloud.plus(r, c) += noise_std * rng.next_gaussian();
                }
                for (int c = 0; c < d; ++c) {
                    if (!std::isfinite(cloud.plus(r, c))) {
                        throw TrainingError("primal_step: non-finite X^+ at h=" +
                                            std::to_string(static_cast<int>(k / b)) +
                                            " i=" + std::to_string(i));
                    }
                }
            }
        }
    });
}

double mean_transport_cost(const ParticleCloud& cloud) {
    const double scale = 0.5 * (cloud.horizon + 1);
    double total = 0.0;
    for (Eigen::Index r = 0; r < cloud.minus.rows(); ++r) {
        total += scale * (cloud.minus.row(r) - cloud.plus.row(r)).squaredNorm();
    }
    return total / cloud.b;
}

std::vector<ChainPair> chain_pairs(const ParticleCloud& cloud) {
    const int H = cloud.horizon;
    const int b = cloud.b;
    const int d = cloud.d;
    std::vector<ChainPair> pairs;
    pairs.reserve(static_cast<size_t>(b) * (H + 2));
    for (int i = 0; i < b; ++i) {
        const int label = cloud.labels.empty() ? -1 : cloud.labels[i];
        pairs.push_back({cloud.src_anchor.row(i).data(),
                         cloud.minus.data() + cloud.row(0, i) * d, 0, label});
        for (int h = 1; h <= H; ++h) {
            pairs.push_back({cloud.plus.data() + cloud.row(h - 1, i) * d,
                             cloud.minus.data() + cloud.row(h, i) * d, h, label});
        }
        pairs.push_back({cloud.plus.data() + cloud.row(H, i) * d,
                         cloud.tgt_anchor.row(i).data(), H + 1, label});
    }
    return pairs;
}

double empirical_lagrangian(const ParticleCloud& cloud, const ValueNetwork& net,
                            const Batch& batch, int horizon) {
    if (horizon != cloud.horizon) throw InputError("empirical_lagrangian: horizon mismatch");
    if (batch.source_points.rows() != cloud.b) {
        throw InputError("empirical_lagrangian: batch size mismatch");
    }
    const int d = cloud.d;
    const int ed = net.config().time_embed_dim;
    const Points embeds = time_embed_table(cloud.horizon, ed);

    // Value terms, telescoped per interface. Coinciding interfaces are
    // skipped: they contribute exactly zero.
    const std::vector<ChainPair> pairs = chain_pairs(cloud);
    std::vector<const ChainPair*> active;
    active.reserve(pairs.size());
    for (const ChainPair& p : pairs) {
        if (std::memcmp(p.pos, p.neg, sizeof(double) * d) != 0) active.push_back(&p);
    }

    double value_terms = 0.0;
    if (!active.empty()) {
        const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(active.size());
        std::vector<double> diffs(static_cast<size_t>(m));
        parallel_for_blocks(m, [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
            const int count = static_cast<int>(end - begin);
            std::vector<double> xs(static_cast<size_t>(2 * count) * d);
            std::vector<double> eb(static_cast<size_t>(2 * count) * ed);
            std::vector<int> lb(static_cast<size_t>(2 * count));
            for (std::ptrdiff_t k = begin; k < end; ++k) {
                const ChainPair& p = *active[k];
                const std::ptrdiff_t j = 2 * (k - begin);
                std::memcpy(xs.data() + j * d, p.pos, sizeof(double) * d);
                std::memcpy(xs.data() + (j + 1) * d, p.neg, sizeof(double) * d);
                std::memcpy(eb.data() + j * ed, embeds.row(p.level).data(), sizeof(double) * ed);
                std::memcpy(eb.data() + (j + 1) * ed, embeds.row(p.level).data(),
                            sizeof(double) * ed);
                lb[static_cast<size_t>(j)] = p.label;
                lb[static_cast<size_t>(j) + 1] = p.label;
            }
            std::vector<double> vals(static_cast<size_t>(2 * count));
            net.forward_batch(xs.data(), 2 * count, eb.data(), false,
                              net.conditional() ? lb.data() : nullptr, vals.data());
            for (std::ptrdiff_t k = begin; k < end; ++k) {
                const std::ptrdiff_t j = 2 * (k - begin);
                diffs[static_cast<size_t>(k)] =
                    vals[static_cast<size_t>(j)] - vals[static_cast<size_t>(j) + 1];
            }
        });
        for (double v : diffs) value_terms += v;
    }

    return mean_transport_cost(cloud) + value_terms / cloud.b;
}

double constraint_residual(const ParticleCloud& cloud) {
    double worst = 0.0;
    for (int i = 0; i < cloud.b; ++i) {
        worst = std::max(worst,
                         (cloud.minus.row(cloud.row(0, i)) - cloud.src_anchor.row(i)).norm());
        worst = std::max(worst,
                         (cloud.plus.row(cloud.row(cloud.horizon, i)) - cloud.tgt_anchor.row(i)).norm());
        for (int h = 0; h < cloud.horizon; ++h) {
            worst = std::max(worst, (cloud.plus.row(cloud.row(h, i)) -
                                     cloud.minus.row(cloud.row(h + 1, i))).norm());
        }
    }
    return worst;
}

}  // namespace vdt
