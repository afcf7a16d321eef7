// Generation with a trained value field: iterate the transport policy
//   x <- x - (1/(H_test+1)) grad V(x, t_h),  t_h = h/(H_test+1),
// forward for h = 0..H_test, or sign- and time-flipped for reverse
// generation. Guided steps blend conditional and unconditional gradients.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vdt/datasets.hpp"
#include "vdt/valuenet.hpp"

namespace vdt {

struct GenerationConfig {
    int h_test = 100;
    bool reverse = false;
    std::optional<int> label;
    std::optional<double> guidance_scale;  // alpha; requires label
    int n = 1;
    uint64_t seed = 1;
    bool keep_trajectory = false;

    void validate() const;
};

// One policy step from state x at step index h out of H_test. With a
// guidance scale, the step direction is
// alpha * grad V(x,t,label) + (1-alpha) * grad V(x,t,uncond).
Eigen::VectorXd vdt_step(const ValueField& v, const Eigen::VectorXd& x, int h, int h_test,
                         std::optional<int> label = {}, std::optional<double> guidance = {});

struct GenerationResult {
    Points samples;                  // n x d final states
    std::vector<Points> trajectory;  // H_test+2 state sets when requested, else empty
};

// Iterates the policy from the given initial states. Throws GenerationError
// (with the step index) when a state goes non-finite.
GenerationResult generate(const ValueField& v, const Points& initial, const GenerationConfig& gcfg);
// Draws gcfg.n initial points from the dataset first.
GenerationResult generate(const ValueField& v, const DatasetSpec& source,
                          const GenerationConfig& gcfg);

// Reverse generation: Y <- Y + (1/(H_test+1)) grad V(Y, t_{H_test-k}).
GenerationResult generate_reverse(const ValueField& v, const Points& initial,
                                  const GenerationConfig& gcfg);
GenerationResult generate_reverse(const ValueField& v, const DatasetSpec& target,
                                  const GenerationConfig& gcfg);

}  // namespace vdt
