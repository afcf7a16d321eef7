#include "vdt/valuenet.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "vdt/errors.hpp"
#include "vdt/rng.hpp"

namespace vdt {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

constexpr uint64_t kWeightInitTag = 0x5eedb2af;
constexpr uint64_t kLabelInitTag = 0x1ab31a8e;

// Per-thread scratch; reused across calls so hot loops do not allocate.
struct Workspace {
    Eigen::MatrixXd a0;                // assembled inputs, feature_dim x N
    std::vector<Eigen::MatrixXd> act;  // per hidden layer: activations
    std::vector<Eigen::MatrixXd> der;  // per hidden layer: activation derivative
    Eigen::MatrixXd t1, t2;            // backward ping-pong
    Eigen::RowVectorXd y;
};

Workspace& workspace() {
    static thread_local Workspace ws;
    return ws;
}

// Forward pass over the assembled block in ws.a0. Leaves activations in
// ws.act (in place over the pre-activations) and, when wanted, activation
// derivatives in ws.der. Output row lands in ws.y.
void forward_core(const std::vector<double>& params, const std::vector<LayerView>& layers,
                  Activation act, Workspace& ws, bool want_derivs) {
    const size_t n_hidden = layers.size() - 1;
    const Eigen::Index n = ws.a0.cols();
    if (ws.act.size() < n_hidden) ws.act.resize(n_hidden);
    if (want_derivs && ws.der.size() < n_hidden) ws.der.resize(n_hidden);

    const Eigen::MatrixXd* prev = &ws.a0;
    for (size_t l = 0; l < n_hidden; ++l) {
        const LayerView& lv = layers[l];
        RowMajorMap w(params.data() + lv.w_offset, lv.n_out, lv.n_in);
        VecMap b(params.data() + lv.b_offset, lv.n_out);
        Eigen::MatrixXd& z = ws.act[l];
        z.resize(lv.n_out, n);
        z.noalias() = w * (*prev);
        z.colwise() += b;
        if (act == Activation::SmoothGated) {
            if (want_derivs) {
                Eigen::MatrixXd& d = ws.der[l];
                d.resize(lv.n_out, n);
                d.array() = (1.0 + (-z.array()).exp()).inverse();  // sigmoid
                z.array() *= d.array();                            // activation
                d.array() += z.array() * (1.0 - d.array());        // s + a(1-s)
            } else {
                z.array() /= 1.0 + (-z.array()).exp();
            }
        } else {
            z.array() = z.array().tanh();
            if (want_derivs) {
                Eigen::MatrixXd& d = ws.der[l];
                d.resize(lv.n_out, n);
                d.array() = 1.0 - z.array().square();
            }
        }
        prev = &z;
    }
    const LayerView& out = layers.back();
    RowMajorMap w(params.data() + out.w_offset, 1, out.n_in);
    ws.y.noalias() = w * (*prev);
    ws.y.array() += params[static_cast<size_t>(out.b_offset)];
}

}  // namespace

void NetworkConfig::validate() const {
    if (input_dim <= 0) throw ConfigError("network: input_dim must be positive");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
        throw ConfigError("network: time_embed_dim must be even and >= 2");
    }
    for (int h : hidden_dims) {
        if (h <= 0) throw ConfigError("network: hidden layer widths must be positive");
    }
    if (num_labels < 0) throw ConfigError("network: num_labels must be non-negative");
    if (num_labels > 0 && label_embed_dim <= 0) {
        throw ConfigError("network: conditional network needs label_embed_dim > 0");
    }
    if (num_labels == 0 && label_embed_dim != 0) {
        throw ConfigError("network: label_embed_dim set without labels");
    }
}

std::ptrdiff_t NetworkConfig::param_count() const {
    std::ptrdiff_t count = 0;
    int n_in = feature_dim();
    for (int h : hidden_dims) {
        count += static_cast<std::ptrdiff_t>(h) * n_in + h;
        n_in = h;
    }
    count += n_in + 1;  // linear output layer
    if (num_labels > 0) count += static_cast<std::ptrdiff_t>(num_labels + 1) * label_embed_dim;
    return count;
}

Eigen::VectorXd time_embed(double t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw ConfigError("time_embed: dim must be even and >= 2");
    Eigen::VectorXd e(dim);
    const int half = dim / 2;
    for (int j = 0; j < half; ++j) {
        const double w = std::exp(-2.0 * j * std::log(10000.0) / dim);
        e[2 * j] = std::sin(w * t);
        e[2 * j + 1] = std::cos(w * t);
    }
    return e;
}

Points time_embed_table(int horizon, int dim) {
    Points table(horizon + 2, dim);
    for (int h = 0; h <= horizon + 1; ++h) {
        table.row(h) = time_embed(static_cast<double>(h) / (horizon + 1), dim).transpose();
    }
    return table;
}

void ValueField::value_batch(const Points& xs, double t, const int* labels, double* out) const {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        out[i] = value(xs.row(i).data(), t, labels ? labels[i] : -1);
    }
}

void ValueField::grad_x_batch(const Points& xs, double t, const int* labels, Points& gx) const {
    gx.resize(xs.rows(), xs.cols());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        grad_x(xs.row(i).data(), t, labels ? labels[i] : -1, gx.row(i).data());
    }
}

ValueNetwork::ValueNetwork(NetworkConfig config) : config_(std::move(config)) {
    config_.validate();
    std::ptrdiff_t offset = 0;
    int n_in = config_.feature_dim();
    std::vector<int> widths = config_.hidden_dims;
    widths.push_back(1);
    for (int n_out : widths) {
        layers_.push_back({offset, offset + static_cast<std::ptrdiff_t>(n_out) * n_in, n_in, n_out});
        offset += static_cast<std::ptrdiff_t>(n_out) * n_in + n_out;
        n_in = n_out;
    }
    if (config_.num_labels > 0) label_table_offset_ = offset;
    params_.assign(static_cast<size_t>(config_.param_count()), 0.0);
}

ValueNetwork::ValueNetwork(NetworkConfig config, uint64_t seed) : ValueNetwork(std::move(config)) {
    for (size_t l = 0; l < layers_.size(); ++l) {
        const LayerView& lv = layers_[l];
        RngStream rng(mix(seed, kWeightInitTag, l));
        const double limit = std::sqrt(6.0 / (lv.n_in + lv.n_out));
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(lv.n_out) * lv.n_in; ++k) {
            params_[static_cast<size_t>(lv.w_offset + k)] = rng.next_uniform(-limit, limit);
        }
    }
    if (conditional()) {
        RngStream rng(mix(seed, kLabelInitTag));
        const double limit = std::sqrt(3.0 / config_.label_embed_dim);
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(config_.num_labels + 1) * config_.label_embed_dim;
        for (std::ptrdiff_t k = 0; k < n; ++k) {
            params_[static_cast<size_t>(label_table_offset_ + k)] = rng.next_uniform(-limit, limit);
        }
    }
}

int ValueNetwork::resolve_label(std::optional<int> label) const {
    if (!label.has_value()) return -1;
    if (*label < 0 || *label >= config_.num_labels) {
        throw InputError("label " + std::to_string(*label) + " out of range [0, " +
                         std::to_string(config_.num_labels) + ")");
    }
    return *label;
}

void ValueNetwork::assemble_inputs(const double* xs, int n, const double* embeds,
                                   bool broadcast_embed, const int* labels,
                                   Eigen::MatrixXd& a0) const {
    const int d = config_.input_dim;
    const int ed = config_.time_embed_dim;
    const int led = conditional() ? config_.label_embed_dim : 0;
    a0.resize(d + ed + led, n);
    const double* table = conditional() ? params_.data() + label_table_offset_ : nullptr;
    for (int i = 0; i < n; ++i) {
        double* col = a0.data() + static_cast<std::ptrdiff_t>(i) * a0.rows();
        std::memcpy(col, xs + static_cast<std::ptrdiff_t>(i) * d, sizeof(double) * d);
        std::memcpy(col + d, broadcast_embed ? embeds : embeds + static_cast<std::ptrdiff_t>(i) * ed,
                    sizeof(double) * ed);
        if (led > 0) {
            int lbl = labels ? labels[i] : -1;
            if (lbl < -1 || lbl > config_.num_labels) {
                throw InputError("label " + std::to_string(lbl) + " out of range");
            }
            if (lbl == -1) lbl = config_.num_labels;  // unconditional token row
            std::memcpy(col + d + ed, table + static_cast<std::ptrdiff_t>(lbl) * led,
                        sizeof(double) * led);
        }
    }
}

void ValueNetwork::forward_batch(const double* xs, int n, const double* embeds,
                                 bool broadcast_embed, const int* labels, double* out) const {
    Workspace& ws = workspace();
    assemble_inputs(xs, n, embeds, broadcast_embed, labels, ws.a0);
    forward_core(params_, layers_, config_.activation, ws, false);
    std::memcpy(out, ws.y.data(), sizeof(double) * n);
}

void ValueNetwork::grad_input_batch(const double* xs, int n, const double* embeds,
                                    bool broadcast_embed, const int* labels, double* gx) const {
    Workspace& ws = workspace();
    assemble_inputs(xs, n, embeds, broadcast_embed, labels, ws.a0);

    const size_t n_hidden = layers_.size() - 1;
    const LayerView& out = layers_.back();
    VecMap wout(params_.data() + out.w_offset, out.n_in);
    const int d = config_.input_dim;

    if (n_hidden == 0) {
        // Linear model: gradient is the weight row itself.
        for (int i = 0; i < n; ++i) {
            std::memcpy(gx + static_cast<std::ptrdiff_t>(i) * d, wout.data(), sizeof(double) * d);
        }
        return;
    }

    forward_core(params_, layers_, config_.activation, ws, true);

    Eigen::MatrixXd& delta = ws.t1;
    delta.resize(ws.der[n_hidden - 1].rows(), n);
    delta.array() = ws.der[n_hidden - 1].array().colwise() * wout.array();
    for (size_t l = n_hidden - 1; l > 0; --l) {
        const LayerView& lv = layers_[l];
        RowMajorMap w(params_.data() + lv.w_offset, lv.n_out, lv.n_in);
        ws.t2.resize(lv.n_in, n);
        ws.t2.noalias() = w.transpose() * delta;
        ws.t2.array() *= ws.der[l - 1].array();
        std::swap(ws.t1, ws.t2);
    }
    const LayerView& first = layers_.front();
    RowMajorMap w1(params_.data() + first.w_offset, first.n_out, first.n_in);
    // Only the x rows of d/d(input) are requested.
    ws.t2.resize(d, n);
    ws.t2.noalias() = w1.transpose().topRows(d) * ws.t1;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            gx[static_cast<std::ptrdiff_t>(i) * d + k] = ws.t2(k, i);
        }
    }
}

void ValueNetwork::grad_params_batch(const double* xs, int n, const double* embeds,
                                     bool broadcast_embed, const int* labels, const double* scales,
                                     double* grad, double* values_out) const {
    Workspace& ws = workspace();
    assemble_inputs(xs, n, embeds, broadcast_embed, labels, ws.a0);
    forward_core(params_, layers_, config_.activation, ws, true);
    if (values_out) std::memcpy(values_out, ws.y.data(), sizeof(double) * n);

    const size_t n_hidden = layers_.size() - 1;
    Eigen::Map<const Eigen::RowVectorXd> s(scales, n);

    const LayerView& out = layers_.back();
    {
        const Eigen::MatrixXd& a_last = n_hidden == 0 ? ws.a0 : ws.act[n_hidden - 1];
        Eigen::Map<Eigen::RowVectorXd> gw(grad + out.w_offset, out.n_in);
        gw.noalias() += s * a_last.transpose();
        grad[out.b_offset] += s.sum();
    }

    if (n_hidden > 0) {
        VecMap wout(params_.data() + out.w_offset, out.n_in);
        Eigen::MatrixXd& delta = ws.t1;
        delta.resize(ws.der[n_hidden - 1].rows(), n);
        delta.array() =
            (ws.der[n_hidden - 1].array().colwise() * wout.array()).rowwise() * s.array();
        for (size_t l = n_hidden; l-- > 0;) {
            const LayerView& lv = layers_[l];
            const Eigen::MatrixXd& a_prev = l == 0 ? ws.a0 : ws.act[l - 1];
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
                grad + lv.w_offset, lv.n_out, lv.n_in);
            gw.noalias() += delta * a_prev.transpose();
            Eigen::Map<Eigen::VectorXd> gb(grad + lv.b_offset, lv.n_out);
            gb.noalias() += delta.rowwise().sum();
            if (l > 0) {
                RowMajorMap w(params_.data() + lv.w_offset, lv.n_out, lv.n_in);
                ws.t2.resize(lv.n_in, n);
                ws.t2.noalias() = w.transpose() * delta;
                ws.t2.array() *= ws.der[l - 1].array();
                std::swap(ws.t1, ws.t2);
            } else if (conditional()) {
                RowMajorMap w(params_.data() + lv.w_offset, lv.n_out, lv.n_in);
                const int d = config_.input_dim;
                const int ed = config_.time_embed_dim;
                const int led = config_.label_embed_dim;
                ws.t2.resize(led, n);
                ws.t2.noalias() = w.transpose().middleRows(d + ed, led) * delta;
                for (int i = 0; i < n; ++i) {
                    int lbl = labels ? labels[i] : -1;
                    if (lbl == -1) lbl = config_.num_labels;
                    Eigen::Map<Eigen::VectorXd> row(
                        grad + label_table_offset_ + static_cast<std::ptrdiff_t>(lbl) * led, led);
                    row += ws.t2.col(i);
                }
            }
        }
    } else if (conditional()) {
        RowMajorMap w(params_.data() + out.w_offset, 1, out.n_in);
        const int d = config_.input_dim;
        const int ed = config_.time_embed_dim;
        const int led = config_.label_embed_dim;
        for (int i = 0; i < n; ++i) {
            int lbl = labels ? labels[i] : -1;
            if (lbl == -1) lbl = config_.num_labels;
            Eigen::Map<Eigen::VectorXd> row(
                grad + label_table_offset_ + static_cast<std::ptrdiff_t>(lbl) * led, led);
            row += scales[i] * w.row(0).segment(d + ed, led).transpose();
        }
    }
}

double ValueNetwork::value(const double* x, double t, int label) const {
    const Eigen::VectorXd e = time_embed(t, config_.time_embed_dim);
    double out;
    forward_batch(x, 1, e.data(), true, label >= 0 ? &label : nullptr, &out);
    return out;
}

void ValueNetwork::grad_x(const double* x, double t, int label, double* gx) const {
    const Eigen::VectorXd e = time_embed(t, config_.time_embed_dim);
    grad_input_batch(x, 1, e.data(), true, label >= 0 ? &label : nullptr, gx);
}

void ValueNetwork::value_batch(const Points& xs, double t, const int* labels, double* out) const {
    if (xs.cols() != config_.input_dim) throw InputError("value_batch: state dimension mismatch");
    const Eigen::VectorXd e = time_embed(t, config_.time_embed_dim);
    forward_batch(xs.data(), static_cast<int>(xs.rows()), e.data(), true, labels, out);
}

void ValueNetwork::grad_x_batch(const Points& xs, double t, const int* labels, Points& gx) const {
    if (xs.cols() != config_.input_dim) throw InputError("grad_x_batch: state dimension mismatch");
    const Eigen::VectorXd e = time_embed(t, config_.time_embed_dim);
    gx.resize(xs.rows(), xs.cols());
    grad_input_batch(xs.data(), static_cast<int>(xs.rows()), e.data(), true, labels, gx.data());
}

double ValueNetwork::forward(std::span<const double> x, double t, std::optional<int> label) const {
    if (static_cast<int>(x.size()) != config_.input_dim) {
        throw InputError("forward: expected state of dimension " + std::to_string(config_.input_dim));
    }
    return value(x.data(), t, resolve_label(label));
}

Eigen::VectorXd ValueNetwork::grad_input(std::span<const double> x, double t,
                                         std::optional<int> label) const {
    if (static_cast<int>(x.size()) != config_.input_dim) {
        throw InputError("grad_input: expected state of dimension " +
                         std::to_string(config_.input_dim));
    }
    Eigen::VectorXd g(config_.input_dim);
    grad_x(x.data(), t, resolve_label(label), g.data());
    return g;
}

void ValueNetwork::grad_params(std::span<const double> x, double t, std::optional<int> label,
                               double scale, std::span<double> grad) const {
    if (static_cast<int>(x.size()) != config_.input_dim) {
        throw InputError("grad_params: expected state of dimension " +
                         std::to_string(config_.input_dim));
    }
    if (grad.size() != params_.size()) {
        throw InputError("grad_params: gradient buffer length mismatch");
    }
    if (scale == 0.0) return;
    const Eigen::VectorXd e = time_embed(t, config_.time_embed_dim);
    const int lbl = resolve_label(label);
    grad_params_batch(x.data(), 1, e.data(), true, lbl >= 0 ? &lbl : nullptr, &scale, grad.data());
}

OptimizerState OptimizerState::for_network(const ValueNetwork& net, double lr, double beta1,
                                           double beta2, double epsilon) {
    OptimizerState s;
    s.first_moment.assign(net.params().size(), 0.0);
    s.second_moment.assign(net.params().size(), 0.0);
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

void adam_step(ValueNetwork& net, OptimizerState& opt, std::span<const double> ascent_direction) {
    auto& params = net.params();
    if (ascent_direction.size() != params.size() || opt.first_moment.size() != params.size() ||
        opt.second_moment.size() != params.size()) {
        throw InputError("adam_step: direction/moment length mismatch");
    }
    for (double g : ascent_direction) {
        if (!std::isfinite(g)) throw TrainingError("adam_step: non-finite ascent direction entry");
    }
    opt.step_count += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = -ascent_direction[i];
        opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
        opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
        const double mhat = opt.first_moment[i] / bc1;
        const double vhat = opt.second_moment[i] / bc2;
        params[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
}

}  // namespace vdt
