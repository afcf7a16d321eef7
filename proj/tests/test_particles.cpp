#include <doctest.h>

#include <cmath>

#include "vdt/datasets.hpp"
#include "vdt/errors.hpp"
#include "vdt/particles.hpp"

using namespace vdt;

namespace {

Batch two_point_batch(double sx, double sy, double tx, double ty) {
    Batch b;
    b.source_points.resize(1, 2);
    b.source_points << sx, sy;
    b.target_points.resize(1, 2);
    b.target_points << tx, ty;
    b.coupling_mode = CouplingMode::Paired;
    return b;
}

Batch batch_1d(double s, double t) {
    Batch b;
    b.source_points.resize(1, 1);
    b.source_points << s;
    b.target_points.resize(1, 1);
    b.target_points << t;
    b.coupling_mode = CouplingMode::Paired;
    return b;
}

ValueNetwork zero_net(int dim) {
    NetworkConfig cfg;
    cfg.input_dim = dim;
    cfg.hidden_dims = {8};
    cfg.time_embed_dim = 4;
    return ValueNetwork(cfg);
}

// Linear value V(x) = w.x for every time index.
ValueNetwork linear_value(const Eigen::VectorXd& w) {
    NetworkConfig cfg;
    cfg.input_dim = static_cast<int>(w.size());
    cfg.hidden_dims = {};
    cfg.time_embed_dim = 2;
    ValueNetwork net(cfg);
    for (int i = 0; i < w.size(); ++i) net.params()[static_cast<size_t>(i)] = w[i];
    return net;
}

}  // namespace

TEST_CASE("transport cost and gradients") {
    Eigen::VectorXd x(2), y(2);
    x << 1, 1;
    y << 1, 1;
    const CostEval same = transport_cost(x, y, 3);
    CHECK(same.value == 0.0);
    CHECK(same.grad_x.norm() == 0.0);
    CHECK(same.grad_y.norm() == 0.0);

    x << 0, 0;
    y << 1, 0;
    CHECK(transport_cost(x, y, 100).value == doctest::Approx(50.5).epsilon(1e-15));

    y << 1, 1;
    const CostEval c = transport_cost(x, y, 1);
    CHECK(c.value == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(c.grad_x[0] == -2.0);
    CHECK(c.grad_x[1] == -2.0);
    CHECK(c.grad_y[0] == 2.0);

    Eigen::VectorXd bad(3);
    CHECK_THROWS_AS(transport_cost(x, bad, 1), InputError);
}

TEST_CASE("init_particles builds the uniform interpolation") {
    SUBCASE("H = 1 midpoint") {
        const ParticleCloud cloud = init_particles(two_point_batch(0, 0, 2, 2), 1);
        CHECK(cloud.minus.row(cloud.row(0, 0)) == cloud.src_anchor.row(0));
        CHECK(cloud.plus(cloud.row(0, 0), 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cloud.plus(cloud.row(0, 0), 1) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cloud.minus.row(cloud.row(1, 0)) == cloud.plus.row(cloud.row(0, 0)));
        CHECK(cloud.plus.row(cloud.row(1, 0)) == cloud.tgt_anchor.row(0));
    }

    SUBCASE("H = 0 is just the anchors") {
        const ParticleCloud cloud = init_particles(two_point_batch(0, 0, 2, 2), 0);
        CHECK(cloud.minus.row(0) == cloud.src_anchor.row(0));
        CHECK(cloud.plus.row(0) == cloud.tgt_anchor.row(0));
    }

    SUBCASE("H = 3 in 1D has unit gaps") {
        const ParticleCloud cloud = init_particles(batch_1d(0, 4), 3);
        for (int h = 0; h <= 3; ++h) {
            CHECK(cloud.minus(cloud.row(h, 0), 0) == doctest::Approx(h).epsilon(1e-15));
            CHECK(cloud.plus(cloud.row(h, 0), 0) == doctest::Approx(h + 1).epsilon(1e-15));
        }
    }
}

TEST_CASE("fresh clouds satisfy the chain constraints exactly") {
    const Sample src = sample(DatasetSpec{"gaussian", false}, 128, 1);
    const Sample tgt = sample(DatasetSpec{"moons", false}, 128, 2);
    const Batch batch = make_batch(src, tgt, 128, CouplingMode::Ot, 3);
    const ParticleCloud cloud = init_particles(batch, 10);
    CHECK(constraint_residual(cloud) == 0.0);

    // Straight-line transport cost equals half the mean squared matched
    // distance (the coupling is the batch pairing itself).
    double msd = 0.0;
    for (int i = 0; i < 128; ++i) {
        msd += (batch.source_points.row(i) - batch.target_points.row(i)).squaredNorm();
    }
    msd /= 128;
    CHECK(std::abs(mean_transport_cost(cloud) - 0.5 * msd) <= 1e-9);
}

TEST_CASE("constraint_residual measures the worst mismatch") {
    ParticleCloud cloud = init_particles(two_point_batch(0, 0, 2, 2), 2);
    cloud.minus(cloud.row(1, 0), 0) += 0.3;
    cloud.minus(cloud.row(1, 0), 1) += 0.4;
    CHECK(constraint_residual(cloud) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("primal_step endpoint and symmetry behavior") {
    SUBCASE("H = 0: both particles are anchors, nothing moves") {
        ParticleCloud cloud = init_particles(batch_1d(0, 2), 0);
        const ParticleCloud before = cloud;
        primal_step(cloud, zero_net(1), 0.25, 0.0, 0, 9);
        CHECK(cloud.minus == before.minus);
        CHECK(cloud.plus == before.plus);
    }

    SUBCASE("H = 1 symmetric configuration: the knot's two copies split "
            "symmetrically, mean pinned at the midpoint") {
        ParticleCloud cloud = init_particles(batch_1d(0, 2), 1);
        primal_step(cloud, zero_net(1), 0.25, 0.0, 1, 9);
        const double plus0 = cloud.plus(cloud.row(0, 0), 0);
        const double minus1 = cloud.minus(cloud.row(1, 0), 0);
        CHECK(0.5 * (plus0 + minus1) == 1.0);
        CHECK(plus0 == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(minus1 == doctest::Approx(1.25).epsilon(1e-15));
    }
}

TEST_CASE("straight-line cloud is a fixed point under the matched linear value") {
    // grad V = src - tgt makes every particle gradient vanish.
    Eigen::VectorXd w(2);
    w << -3.0, -4.0;  // src (0,0), tgt (3,4)
    const ValueNetwork net = linear_value(w);
    ParticleCloud cloud = init_particles(two_point_batch(0, 0, 3, 4), 5);
    const ParticleCloud before = cloud;
    for (int k = 0; k < 3; ++k) primal_step(cloud, net, 0.5, 0.0, 5, 1);
    CHECK((cloud.minus - before.minus).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((cloud.plus - before.plus).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("with V = 0 the transport cost decreases monotonically") {
    ParticleCloud cloud = init_particles(two_point_batch(0, 0, 2, 2), 3);
    const ValueNetwork net = zero_net(2);
    double prev = mean_transport_cost(cloud);
    for (int k = 0; k < 10; ++k) {
        primal_step(cloud, net, 0.3, 0.0, 3, 5);
        const double cost = mean_transport_cost(cloud);
        CHECK(cost <= prev + 1e-15);
        prev = cost;
    }
}

TEST_CASE("noise breaks the chain constraints") {
    ParticleCloud cloud = init_particles(two_point_batch(0, 0, 2, 2), 2);
    primal_step(cloud, zero_net(2), 0.5, 1e-3, 2, 123);
    CHECK(constraint_residual(cloud) > 0.0);
}

TEST_CASE("primal noise is reproducible under the same seed") {
    ParticleCloud a = init_particles(two_point_batch(0, 0, 2, 2), 4);
    ParticleCloud b = init_particles(two_point_batch(0, 0, 2, 2), 4);
    const ValueNetwork net = zero_net(2);
    primal_step(a, net, 0.5, 1e-3, 4, 77);
    primal_step(b, net, 0.5, 1e-3, 4, 77);
    CHECK(a.minus == b.minus);
    CHECK(a.plus == b.plus);
}

TEST_CASE("empirical lagrangian") {
    SUBCASE("value terms vanish for V = 0") {
        Batch batch = two_point_batch(0, 0, 3, 4);
        ParticleCloud cloud = init_particles(batch, 7);
        const ValueNetwork net = zero_net(2);
        primal_step(cloud, net, 0.3, 1e-3, 7, 3);  // move off the line
        CHECK(empirical_lagrangian(cloud, net, batch, 7) == mean_transport_cost(cloud));
    }

    SUBCASE("feasible chains telescope exactly for any V") {
        Batch batch = two_point_batch(0.5, -1, 3, 4);
        ParticleCloud cloud = init_particles(batch, 6);
        NetworkConfig cfg;
        const ValueNetwork net(cfg, 44);
        CHECK(empirical_lagrangian(cloud, net, batch, 6) == mean_transport_cost(cloud));
    }

    SUBCASE("point-mass straight line costs half the squared distance") {
        Batch batch = two_point_batch(0, 0, 3, 4);
        for (int H : {0, 1, 4, 9}) {
            ParticleCloud cloud = init_particles(batch, H);
            CHECK(std::abs(empirical_lagrangian(cloud, zero_net(2), batch, H) - 12.5) <= 1e-9);
        }
    }
}
