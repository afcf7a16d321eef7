#include <doctest.h>

#include <cmath>
#include <vector>

#include "vdt/errors.hpp"
#include "vdt/rng.hpp"
#include "vdt/valuenet.hpp"

using namespace vdt;

namespace {

// Pure linear model on the state: V(x) = w.x, time embedding weighted zero.
ValueNetwork linear_net(const std::vector<double>& w) {
    NetworkConfig cfg;
    cfg.input_dim = static_cast<int>(w.size());
    cfg.hidden_dims = {};
    cfg.time_embed_dim = 2;
    ValueNetwork net(cfg);
    for (size_t i = 0; i < w.size(); ++i) net.params()[i] = w[i];
    return net;
}

NetworkConfig small_config() {
    NetworkConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_dims = {16, 16};
    cfg.time_embed_dim = 8;
    return cfg;
}

Eigen::VectorXd fd_grad_input(const ValueNetwork& net, Eigen::VectorXd x, double t,
                              std::optional<int> label, double h = 1e-4) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = net.forward({x.data(), static_cast<size_t>(x.size())}, t, label);
        x[i] = orig - h;
        const double down = net.forward({x.data(), static_cast<size_t>(x.size())}, t, label);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

std::vector<double> fd_grad_params(ValueNetwork& net, const Eigen::VectorXd& x, double t,
                                   std::optional<int> label, double h = 1e-4) {
    std::vector<double> g(net.params().size());
    const std::span<const double> xs{x.data(), static_cast<size_t>(x.size())};
    for (size_t i = 0; i < g.size(); ++i) {
        const double orig = net.params()[i];
        net.params()[i] = orig + h;
        const double up = net.forward(xs, t, label);
        net.params()[i] = orig - h;
        const double down = net.forward(xs, t, label);
        net.params()[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double rel_vec_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double denom = std::max({a.norm(), b.norm(), 1e-8});
    return (a - b).norm() / denom;
}

}  // namespace

TEST_CASE("time_embed matches the sinusoidal form") {
    const Eigen::VectorXd e0 = time_embed(0.0, 4);
    CHECK(e0[0] == 0.0);
    CHECK(e0[1] == 1.0);
    CHECK(e0[2] == 0.0);
    CHECK(e0[3] == 1.0);

    const Eigen::VectorXd e1 = time_embed(1.0, 2);  // w_0 = 1
    CHECK(e1[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(e1[1] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));

    const Eigen::VectorXd e32 = time_embed(0.5, 32);
    CHECK(e32[0] == doctest::Approx(std::sin(0.5)).epsilon(1e-12));
    CHECK(e32[1] == doctest::Approx(std::cos(0.5)).epsilon(1e-12));

    CHECK_THROWS_AS(time_embed(0.5, 3), ConfigError);
}

TEST_CASE("network config validation") {
    NetworkConfig cfg;
    cfg.time_embed_dim = 31;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.time_embed_dim = 32;
    cfg.hidden_dims = {64, 0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.hidden_dims = {64};
    cfg.num_labels = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // missing label_embed_dim
    cfg.label_embed_dim = 8;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("forward on degenerate networks") {
    NetworkConfig cfg;
    cfg.input_dim = 3;
    ValueNetwork zeros(cfg);
    const double x[3] = {1.5, -2.0, 7.0};
    CHECK(zeros.forward({x, 3}, 0.3) == 0.0);

    ValueNetwork lin = linear_net({2.0, -1.0});
    const double y[2] = {3.0, 4.0};
    CHECK(lin.forward({y, 2}, 0.0) == 2.0);
    CHECK(lin.forward({y, 2}, 0.77) == 2.0);  // time weighted zero
}

TEST_CASE("forward is deterministic and rejects bad shapes") {
    ValueNetwork net(small_config(), 99);
    const double x[2] = {0.25, -1.5};
    const double a = net.forward({x, 2}, 0.4);
    const double b = net.forward({x, 2}, 0.4);
    CHECK(a == b);

    const double bad[3] = {1, 2, 3};
    CHECK_THROWS_AS(net.forward({bad, 3}, 0.0), InputError);
    CHECK_THROWS_AS(net.forward({x, 2}, 0.0, 1), InputError);  // unconditional net
}

TEST_CASE("grad_input on linear and zero networks") {
    ValueNetwork lin = linear_net({2.0, -1.0});
    const double x[2] = {10.0, 3.5};
    const Eigen::VectorXd g = lin.grad_input({x, 2}, 0.2);
    CHECK(g[0] == 2.0);
    CHECK(g[1] == -1.0);

    ValueNetwork zeros{small_config()};
    const Eigen::VectorXd gz = zeros.grad_input({x, 2}, 0.2);
    CHECK(gz.norm() == 0.0);
}

TEST_CASE("grad_input matches central finite differences on a seeded 3x64 net") {
    NetworkConfig cfg;  // default [64,64,64], 32-dim embedding
    ValueNetwork net(cfg, 7);
    Eigen::VectorXd x(2);
    x << 0.3, -0.7;
    const Eigen::VectorXd analytic = net.grad_input({x.data(), 2}, 0.5);
    const Eigen::VectorXd numeric = fd_grad_input(net, x, 0.5, {});
    CHECK(rel_vec_error(analytic, numeric) <= 1e-5);
}

TEST_CASE("grad_params basics") {
    ValueNetwork net(small_config(), 3);
    Eigen::VectorXd x(2);
    x << 0.9, 0.1;
    std::vector<double> buf(net.params().size(), 0.5);

    SUBCASE("scale zero leaves the buffer unchanged") {
        net.grad_params({x.data(), 2}, 0.25, {}, 0.0, buf);
        for (double v : buf) CHECK(v == 0.5);
    }

    SUBCASE("+1 then -1 restores the buffer") {
        net.grad_params({x.data(), 2}, 0.25, {}, 1.0, buf);
        net.grad_params({x.data(), 2}, 0.25, {}, -1.0, buf);
        for (double v : buf) CHECK(std::abs(v - 0.5) <= 1e-12);
    }

    SUBCASE("accumulation is linear") {
        std::vector<double> two_calls(net.params().size(), 0.0);
        net.grad_params({x.data(), 2}, 0.25, {}, 0.7, two_calls);
        net.grad_params({x.data(), 2}, 0.25, {}, 0.3, two_calls);
        std::vector<double> one_call(net.params().size(), 0.0);
        net.grad_params({x.data(), 2}, 0.25, {}, 1.0, one_call);
        for (size_t i = 0; i < one_call.size(); ++i) {
            CHECK(std::abs(two_calls[i] - one_call[i]) <= 1e-12);
        }
    }

    SUBCASE("buffer length mismatch") {
        std::vector<double> bad(3);
        CHECK_THROWS_AS(net.grad_params({x.data(), 2}, 0.25, {}, 1.0, bad), InputError);
    }
}

TEST_CASE("grad_params matches central finite differences") {
    ValueNetwork net(small_config(), 11);
    Eigen::VectorXd x(2);
    x << -0.4, 1.2;
    std::vector<double> analytic(net.params().size(), 0.0);
    net.grad_params({x.data(), 2}, 0.6, {}, 1.0, analytic);
    const std::vector<double> numeric = fd_grad_params(net, x, 0.6, {});
    Eigen::Map<const Eigen::VectorXd> a(analytic.data(), static_cast<Eigen::Index>(analytic.size()));
    Eigen::Map<const Eigen::VectorXd> b(numeric.data(), static_cast<Eigen::Index>(numeric.size()));
    CHECK(rel_vec_error(a, b) <= 1e-5);
}

TEST_CASE("gradients check out over 100 random seeded cases") {
    int done = 0;
    for (uint64_t seed = 0; done < 100; ++seed) {
        NetworkConfig cfg = small_config();
        cfg.activation = (seed % 3 == 0) ? Activation::Tanh : Activation::SmoothGated;
        if (seed % 4 == 0) {
            cfg.num_labels = 3;
            cfg.label_embed_dim = 5;
        }
        ValueNetwork net(cfg, mix(0xabc, seed));
        RngStream rng(mix(0xdef, seed));
        Eigen::VectorXd x(2);
        x << rng.next_uniform(-2, 2), rng.next_uniform(-2, 2);
        const double t = rng.next_unit();
        std::optional<int> label;
        if (cfg.num_labels > 0 && seed % 2 == 0) label = static_cast<int>(rng.next_below(3));

        const Eigen::VectorXd gx = net.grad_input({x.data(), 2}, t, label);
        CHECK(rel_vec_error(gx, fd_grad_input(net, x, t, label)) <= 1e-5);

        std::vector<double> gp(net.params().size(), 0.0);
        net.grad_params({x.data(), 2}, t, label, 1.0, gp);
        const std::vector<double> fd = fd_grad_params(net, x, t, label);
        Eigen::Map<const Eigen::VectorXd> a(gp.data(), static_cast<Eigen::Index>(gp.size()));
        Eigen::Map<const Eigen::VectorXd> b(fd.data(), static_cast<Eigen::Index>(fd.size()));
        CHECK(rel_vec_error(a, b) <= 1e-5);
        ++done;
    }
}

TEST_CASE("grad_input is continuous under small input perturbations") {
    NetworkConfig cfg;
    ValueNetwork net(cfg, 21);
    RngStream rng(77);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd x(2);
        x << rng.next_uniform(-3, 3), rng.next_uniform(-3, 3);
        Eigen::VectorXd dx(2);
        dx << rng.next_gaussian(), rng.next_gaussian();
        dx *= 1e-6 / dx.norm();
        const Eigen::VectorXd g0 = net.grad_input({x.data(), 2}, 0.3);
        const Eigen::VectorXd x1 = x + dx;
        const Eigen::VectorXd g1 = net.grad_input({x1.data(), 2}, 0.3);
        CHECK((g1 - g0).norm() <= 1e-3);
    }
}

TEST_CASE("conditional evaluation uses the label table") {
    NetworkConfig cfg = small_config();
    cfg.num_labels = 4;
    cfg.label_embed_dim = 6;
    ValueNetwork net(cfg, 5);
    const double x[2] = {0.5, 0.5};
    const double v0 = net.forward({x, 2}, 0.2, 0);
    const double v1 = net.forward({x, 2}, 0.2, 1);
    const double vu = net.forward({x, 2}, 0.2);  // unconditional token
    CHECK(v0 != v1);
    CHECK(v0 != vu);
    CHECK_THROWS_AS(net.forward({x, 2}, 0.2, 4), InputError);
    CHECK_THROWS_AS(net.forward({x, 2}, 0.2, -3), InputError);
}

TEST_CASE("adam_step follows the standard recurrences") {
    SUBCASE("zero direction only advances the step counter") {
        ValueNetwork net(small_config(), 2);
        const std::vector<double> before = net.params();
        OptimizerState opt = OptimizerState::for_network(net);
        std::vector<double> dir(net.params().size(), 0.0);
        adam_step(net, opt, dir);
        CHECK(opt.step_count == 1);
        CHECK(net.params() == before);
    }

    SUBCASE("first ascent step on a scalar parameter is about +lr") {
        ValueNetwork net = linear_net({0.0});
        OptimizerState opt = OptimizerState::for_network(net, 1e-4);
        std::vector<double> dir(net.params().size(), 0.0);
        dir[0] = 1.0;
        adam_step(net, opt, dir);
        CHECK(net.params()[0] == doctest::Approx(1e-4).epsilon(1e-6));
    }

    SUBCASE("second identical step is no larger than the first (x1.01)") {
        ValueNetwork net = linear_net({0.0});
        OptimizerState opt = OptimizerState::for_network(net, 1e-4);
        std::vector<double> dir(net.params().size(), 0.0);
        dir[0] = 1.0;
        adam_step(net, opt, dir);
        const double step1 = net.params()[0];
        adam_step(net, opt, dir);
        const double step2 = net.params()[0] - step1;
        CHECK(std::abs(step2) <= std::abs(step1) * 1.01);
    }

    SUBCASE("non-finite direction raises a training error") {
        ValueNetwork net(small_config(), 2);
        OptimizerState opt = OptimizerState::for_network(net);
        std::vector<double> dir(net.params().size(), 0.0);
        dir[5] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(adam_step(net, opt, dir), TrainingError);
    }
}

TEST_CASE("batched evaluation agrees with single-point evaluation") {
    NetworkConfig cfg;
    ValueNetwork net(cfg, 31);
    RngStream rng(123);
    Points xs(37, 2);
    for (int i = 0; i < 37; ++i) {
        xs(i, 0) = rng.next_uniform(-3, 3);
        xs(i, 1) = rng.next_uniform(-3, 3);
    }
    std::vector<double> vals(37);
    net.value_batch(xs, 0.42, nullptr, vals.data());
    Points grads;
    net.grad_x_batch(xs, 0.42, nullptr, grads);
    // Batched and single-point paths use different Eigen kernels (GEMM vs
    // GEMV), so agreement is to rounding, not bitwise.
    for (int i = 0; i < 37; ++i) {
        const double single = net.forward({xs.row(i).data(), 2}, 0.42);
        CHECK(vals[static_cast<size_t>(i)] == doctest::Approx(single).epsilon(1e-12));
        const Eigen::VectorXd g = net.grad_input({xs.row(i).data(), 2}, 0.42);
        CHECK(g[0] == doctest::Approx(grads(i, 0)).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(grads(i, 1)).epsilon(1e-12));
    }
}
