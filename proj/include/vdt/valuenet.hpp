// Scalar value network V(x, t[, label]) with exact reverse-mode gradients
// with respect to the state input and the parameters, plus Adam ascent state.
//
// The network is a dense feed-forward stack on the concatenated feature
// vector [x | time_embed(t) | label_embed]. Hidden layers use a smooth gated
// activation (x * sigmoid(x)) by default so the gradient field exists
// everywhere; the output layer is linear.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace vdt {

// Point sets are stored one row per point.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { SmoothGated, Tanh };

struct NetworkConfig {
    int input_dim = 2;
    std::vector<int> hidden_dims = {64, 64, 64};
    int time_embed_dim = 32;
    int num_labels = 0;       // 0 = unconditional network
    int label_embed_dim = 0;  // must be > 0 iff num_labels > 0
    Activation activation = Activation::SmoothGated;

    void validate() const;  // throws ConfigError
    int feature_dim() const {
        return input_dim + time_embed_dim + (num_labels > 0 ? label_embed_dim : 0);
    }
    std::ptrdiff_t param_count() const;
};

// Sinusoidal embedding: pairs [sin(w_j t), cos(w_j t)] with w_j = 10000^(-2j/dim).
Eigen::VectorXd time_embed(double t, int dim);

// Rows h = 0..H+1 hold time_embed(h / (H + 1), dim).
Points time_embed_table(int horizon, int dim);

// Anything that evaluates like a value function. `label` is -1 for
// no-label/unconditional evaluation. Batched entry points default to a scalar
// loop; ValueNetwork overrides them with GEMM paths.
struct ValueField {
    virtual ~ValueField() = default;
    virtual int input_dim() const = 0;
    virtual double value(const double* x, double t, int label) const = 0;
    virtual void grad_x(const double* x, double t, int label, double* gx) const = 0;

    virtual void value_batch(const Points& xs, double t, const int* labels, double* out) const;
    virtual void grad_x_batch(const Points& xs, double t, const int* labels, Points& gx) const;
};

// Per-layer location of the weight matrix (row-major n_out x n_in) and bias
// inside the flat parameter array.
struct LayerView {
    std::ptrdiff_t w_offset;
    std::ptrdiff_t b_offset;
    int n_in;
    int n_out;
};

class ValueNetwork final : public ValueField {
  public:
    // All parameters zero.
    explicit ValueNetwork(NetworkConfig config);
    // Seeded init: per-layer uniform +-sqrt(6/(fan_in+fan_out)), zero biases.
    ValueNetwork(NetworkConfig config, uint64_t seed);

    const NetworkConfig& config() const { return config_; }
    int input_dim() const override { return config_.input_dim; }

    // Flat parameters: per layer [W row-major | bias], layers input->output,
    // then the label table rows 0..num_labels (row num_labels = the
    // unconditional token) when the network is conditional.
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }
    const std::vector<LayerView>& layers() const { return layers_; }
    std::ptrdiff_t label_table_offset() const { return label_table_offset_; }
    bool conditional() const { return config_.num_labels > 0; }

    double value(const double* x, double t, int label) const override;
    void grad_x(const double* x, double t, int label, double* gx) const override;
    void value_batch(const Points& xs, double t, const int* labels, double* out) const override;
    void grad_x_batch(const Points& xs, double t, const int* labels, Points& gx) const override;

    // Spec-facing single-point operations. std::nullopt means "no label"
    // (the unconditional token on a conditional network).
    double forward(std::span<const double> x, double t, std::optional<int> label = {}) const;
    Eigen::VectorXd grad_input(std::span<const double> x, double t,
                               std::optional<int> label = {}) const;
    // grad += scale * d forward / d params at (x, t, label).
    void grad_params(std::span<const double> x, double t, std::optional<int> label, double scale,
                     std::span<double> grad) const;

    // Batched forms over N points with per-point embedding rows. `embeds`
    // holds either one row per point (broadcast = false) or a single shared
    // row (broadcast = true). `labels` may be nullptr (all unconditional).
    void forward_batch(const double* xs, int n, const double* embeds, bool broadcast_embed,
                       const int* labels, double* out) const;
    void grad_input_batch(const double* xs, int n, const double* embeds, bool broadcast_embed,
                          const int* labels, double* gx) const;
    // When values_out is non-null it receives the forward values (the
    // backward pass computes them anyway).
    void grad_params_batch(const double* xs, int n, const double* embeds, bool broadcast_embed,
                           const int* labels, const double* scales, double* grad,
                           double* values_out = nullptr) const;

  private:
    int resolve_label(std::optional<int> label) const;
    void assemble_inputs(const double* xs, int n, const double* embeds, bool broadcast_embed,
                         const int* labels, Eigen::MatrixXd& a0) const;

    NetworkConfig config_;
    std::vector<double> params_;
    std::vector<LayerView> layers_;
    std::ptrdiff_t label_table_offset_ = -1;
};

struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_network(const ValueNetwork& net, double lr = 1e-4,
                                      double beta1 = 0.9, double beta2 = 0.999,
                                      double epsilon = 1e-8);
};

// One Adam step on g = -ascent_direction, so parameters move to increase the
// dual objective. Throws TrainingError on non-finite direction entries.
void adam_step(ValueNetwork& net, OptimizerState& opt, std::span<const double> ascent_direction);

}  // namespace vdt
