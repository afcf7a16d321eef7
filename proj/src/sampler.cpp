#include "vdt/sampler.hpp"

#include <cmath>
#include <string>

#include "vdt/errors.hpp"

namespace vdt {

void GenerationConfig::validate() const {
    if (h_test < 0) throw ConfigError("generation: h_test must be >= 0");
    if (n < 1) throw ConfigError("generation: n must be >= 1");
    if (guidance_scale.has_value()) {
        if (!label.has_value()) throw ConfigError("generation: guidance requires a label");
        if (!(*guidance_scale > 0.0)) throw ConfigError("generation: guidance scale must be > 0");
    }
}

namespace {

// Policy gradient for a whole batch at one time value.
void step_direction(const ValueField& v, const Points& states, double t,
                    const std::optional<int>& label, const std::optional<double>& guidance,
                    const std::vector<int>& labels_buf, Points& dir) {
    if (guidance.has_value()) {
        Points g_cond, g_uncond;
        v.grad_x_batch(states, t, labels_buf.data(), g_cond);
        v.grad_x_batch(states, t, nullptr, g_uncond);
        const double a = *guidance;
        dir = a * g_cond + (1.0 - a) * g_uncond;
    } else {
        v.grad_x_batch(states, t, label.has_value() ? labels_buf.data() : nullptr, dir);
    }
}

GenerationResult run_policy(const ValueField& v, const Points& initial,
                            const GenerationConfig& gcfg, bool reverse) {
    gcfg.validate();
    if (initial.cols() != v.input_dim()) throw InputError("generate: state dimension mismatch");

    const int h_test = gcfg.h_test;
    const double step_len = 1.0 / (h_test + 1);
    const int n = static_cast<int>(initial.rows());
    std::vector<int> labels_buf;
    if (gcfg.label.has_value()) labels_buf.assign(static_cast<size_t>(n), *gcfg.label);

    GenerationResult result;
    Points state = initial;
    if (gcfg.keep_trajectory) {
        result.trajectory.reserve(static_cast<size_t>(h_test) + 2);
        result.trajectory.push_back(state);
    }

    Points dir;
    for (int h = 0; h <= h_test; ++h) {
        const double t = reverse ? static_cast<double>(h_test - h) / (h_test + 1)
                                 : static_cast<double>(h) / (h_test + 1);
        step_direction(v, state, t, gcfg.label, gcfg.guidance_scale, labels_buf, dir);
        if (reverse) {
            state += step_len * dir;
        } else {
            state -= step_len * dir;
        }
        if (!state.allFinite()) {
            throw GenerationError("generate: non-finite state at step " + std::to_string(h), h);
        }
        if (gcfg.keep_trajectory) result.trajectory.push_back(state);
    }
    result.samples = std::move(state);
    return result;
}

}  // namespace

Eigen::VectorXd vdt_step(const ValueField& v, const Eigen::VectorXd& x, int h, int h_test,
                         std::optional<int> label, std::optional<double> guidance) {
    if (h < 0 || h > h_test) throw InputError("vdt_step: h out of range");
    if (guidance.has_value() && !label.has_value()) {
        throw ConfigError("vdt_step: guidance requires a label");
    }
    const double t = static_cast<double>(h) / (h_test + 1);
    Eigen::VectorXd g(x.size());
    if (guidance.has_value()) {
        Eigen::VectorXd g_uncond(x.size());
        v.grad_x(x.data(), t, *label, g.data());
        v.grad_x(x.data(), t, -1, g_uncond.data());
        g = *guidance * g + (1.0 - *guidance) * g_uncond;
    } else {
        v.grad_x(x.data(), t, label.value_or(-1), g.data());
    }
    return x - g / (h_test + 1);
}

GenerationResult generate(const ValueField& v, const Points& initial,
                          const GenerationConfig& gcfg) {
    return run_policy(v, initial, gcfg, gcfg.reverse);
}

GenerationResult generate(const ValueField& v, const DatasetSpec& source,
                          const GenerationConfig& gcfg) {
    const Sample s = sample(source, gcfg.n, gcfg.seed);
    return run_policy(v, s.points, gcfg, gcfg.reverse);
}

GenerationResult generate_reverse(const ValueField& v, const Points& initial,
                                  const GenerationConfig& gcfg) {
    return run_policy(v, initial, gcfg, true);
}

GenerationResult generate_reverse(const ValueField& v, const DatasetSpec& target,
                                  const GenerationConfig& gcfg) {
    const Sample s = sample(target, gcfg.n, gcfg.seed);
    return run_policy(v, s.points, gcfg, true);
}

}  // namespace vdt
