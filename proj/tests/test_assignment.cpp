#include <doctest.h>

#include <cmath>
#include <limits>

#include "vdt/assignment.hpp"
#include "vdt/errors.hpp"
#include "vdt/rng.hpp"

using namespace vdt;

namespace {

CostMatrix matrix(int n, std::vector<double> entries) {
    return CostMatrix{n, std::move(entries)};
}

CostMatrix random_matrix(int n, uint64_t seed) {
    CostMatrix c;
    c.n = n;
    c.entries.resize(static_cast<size_t>(n) * n);
    RngStream rng(seed);
    for (double& e : c.entries) e = rng.next_unit();
    return c;
}

}  // namespace

TEST_CASE("hungarian solves the unit examples") {
    {
        const Assignment a = hungarian_assign(matrix(2, {0, 1, 1, 0}));
        CHECK(a.permutation == std::vector<int>{0, 1});
        CHECK(a.total_cost == 0.0);
    }
    {
        const Assignment a = hungarian_assign(matrix(2, {4, 1, 2, 3}));
        CHECK(a.permutation == std::vector<int>{1, 0});
        CHECK(a.total_cost == 3.0);
    }
    {
        const Assignment a = hungarian_assign(matrix(1, {42.5}));
        CHECK(a.permutation == std::vector<int>{0});
        CHECK(a.total_cost == 42.5);
    }
}

TEST_CASE("hungarian rejects non-finite inputs") {
    CHECK_THROWS_AS(hungarian_assign(matrix(2, {0, 1, std::nan(""), 0})), InputError);
    CHECK_THROWS_AS(
        hungarian_assign(matrix(2, {0, 1, std::numeric_limits<double>::infinity(), 0})),
        InputError);
}

TEST_CASE("brute force oracle") {
    CHECK(brute_force_assign(matrix(2, {0, 1, 1, 0})).total_cost == 0.0);

    // identity-favoring matrix c[i][j] = |i-j|
    CostMatrix c;
    c.n = 5;
    c.entries.resize(25);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) c.entries[static_cast<size_t>(i) * 5 + j] = std::abs(i - j);
    }
    const Assignment a = brute_force_assign(c);
    CHECK(a.permutation == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(a.total_cost == 0.0);

    const Assignment h = hungarian_assign(random_matrix(5, 1234));
    const Assignment b = brute_force_assign(random_matrix(5, 1234));
    CHECK(h.permutation == b.permutation);
    CHECK(h.total_cost == b.total_cost);

    CostMatrix big = random_matrix(10, 1);
    CHECK_THROWS_AS(brute_force_assign(big), InputError);
}

TEST_CASE("hungarian equals brute force on 200 random matrices") {
    for (int k = 0; k < 200; ++k) {
        const int n = 2 + k % 7;  // n in {2..8}
        const CostMatrix c = random_matrix(n, mix(0x77, static_cast<uint64_t>(k)));
        const Assignment h = hungarian_assign(c);
        const Assignment b = brute_force_assign(c);
        REQUIRE(h.total_cost == b.total_cost);
        REQUIRE(h.permutation == b.permutation);
    }
}

TEST_CASE("tie-break picks the lexicographically smallest optimal permutation") {
    // All-equal matrix: every permutation optimal; identity is smallest.
    const Assignment a = hungarian_assign(matrix(3, {1, 1, 1, 1, 1, 1, 1, 1, 1}));
    CHECK(a.permutation == std::vector<int>{0, 1, 2});
    CHECK(a.permutation == brute_force_assign(matrix(3, {1, 1, 1, 1, 1, 1, 1, 1, 1})).permutation);

    // Two optimal solutions: (0,1) and (1,0) both cost 2; (0,1) is smaller.
    const CostMatrix tie = matrix(2, {1, 1, 1, 1});
    CHECK(hungarian_assign(tie).permutation == brute_force_assign(tie).permutation);

    // Degenerate integer matrix exercising the re-augmenting path.
    const CostMatrix z = matrix(3, {0, 0, 1, 0, 1, 0, 0, 1, 1});
    const Assignment hz = hungarian_assign(z);
    const Assignment bz = brute_force_assign(z);
    CHECK(hz.permutation == bz.permutation);
    CHECK(hz.total_cost == bz.total_cost);
}

TEST_CASE("empirical_w2 basics") {
    Points a(3, 2), b(3, 2);
    a << 0, 0, 1, 1, 2, 2;
    b << 2, 2, 0, 0, 1, 1;  // same set, shuffled
    CHECK(empirical_w2(a, b).first == 0.0);

    Points s(1, 2), t(1, 2);
    s << 0, 0;
    t << 3, 4;
    CHECK(empirical_w2(s, t).first == doctest::Approx(5.0).epsilon(1e-12));

    Points u(2, 2), v(2, 2);
    u << 0, 0, 2, 0;
    v << 1, 1, 3, 1;
    // Identity matching: mean squared distance (2 + 2)/2 = 2 -> sqrt(2).
    const auto [dist, coupling] = empirical_w2(u, v);
    CHECK(dist == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(coupling.permutation == std::vector<int>{0, 1});
}

TEST_CASE("empirical_w2 input validation and symmetry") {
    Points a(2, 2), b(3, 2);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(empirical_w2(a, b), InputError);

    RngStream rng(5150);
    Points u(40, 2), v(40, 2);
    for (int i = 0; i < 40; ++i) {
        u(i, 0) = rng.next_gaussian();
        u(i, 1) = rng.next_gaussian();
        v(i, 0) = 2 + rng.next_gaussian();
        v(i, 1) = rng.next_gaussian();
    }
    const double fwd = empirical_w2(u, v).first;
    const double bwd = empirical_w2(v, u).first;
    CHECK(std::abs(fwd - bwd) <= 1e-12);
    CHECK(fwd >= 0.0);
    CHECK(empirical_w2(u, u).first == 0.0);
}
