#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "phpol/simd/kernels.hpp"

using namespace phpol::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

double reference_objective(const std::vector<double>& i1, const std::vector<double>& i2,
                           const std::vector<double>& zx, const std::vector<double>& zy, const LightCoefficients& l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < i1.size(); ++k) {
        const double u = i1[k] * l.t3 - i2[k] * l.s3;
        const double w = zx[k] * (i2[k] * l.s1 - i1[k] * l.t1) + zy[k] * (i2[k] * l.s2 - i1[k] * l.t2);
        acc += std::min((u + w) * (u + w), (u - w) * (u - w));
    }
    return acc;
}

const LightCoefficients kLights{0.196, 0.0, 0.98, -0.136, -0.272, 0.953};

}  // namespace

TEST_CASE("isa names") {
    CHECK(parse_isa("scalar") == Isa::Scalar);
    CHECK(parse_isa("avx2") == Isa::Avx2);
    CHECK(parse_isa("auto") == best_isa());
    CHECK_THROWS_AS(parse_isa("sse9"), std::invalid_argument);
    CHECK(std::string(to_string(Isa::Scalar)) == "scalar");
    CHECK(isa_supported(Isa::Scalar));
}

TEST_CASE("scalar objective equals the two-branch minimum") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {0u, 1u, 7u, 100u}) {
        const auto i1 = random_vector(rng, n, 0, 1), i2 = random_vector(rng, n, 0, 1);
        const auto zx = random_vector(rng, n, -2, 2), zy = random_vector(rng, n, -2, 2);
        const double got = kernels_for(Isa::Scalar).light_objective(i1.data(), i2.data(), zx.data(), zy.data(), n, kLights);
        CHECK(got == doctest::Approx(reference_objective(i1, i2, zx, zy, kLights)).epsilon(1e-13));
    }
}

TEST_CASE("vector kernels agree with the scalar reference") {
    if (!isa_supported(Isa::Avx2)) {
        MESSAGE("AVX2 not available; equivalence not exercised");
        return;
    }
    const auto& sc = kernels_for(Isa::Scalar);
    const auto& vx = kernels_for(Isa::Avx2);
    CHECK(vx.isa == Isa::Avx2);
    std::mt19937_64 rng(9);
    // Every tail length around the vector width.
    for (std::size_t n = 0; n < 40; ++n) {
        const auto i1 = random_vector(rng, n, 0, 1), i2 = random_vector(rng, n, 0, 1);
        const auto zx = random_vector(rng, n, -3, 3), zy = random_vector(rng, n, -3, 3);
        const double a = sc.light_objective(i1.data(), i2.data(), zx.data(), zy.data(), n, kLights);
        const double b = vx.light_objective(i1.data(), i2.data(), zx.data(), zy.data(), n, kLights);
        CHECK(b == doctest::Approx(a).epsilon(1e-12));

        const auto base = random_vector(rng, n, 0, 1), pa = random_vector(rng, n, -0.4, 0.4),
                   pb = random_vector(rng, n, -0.4, 0.4);
        std::vector<double> o1(n), o2(n);
        sc.modulate(base.data(), pa.data(), pb.data(), 0.3, -0.7, o1.data(), n);
        vx.modulate(base.data(), pa.data(), pb.data(), 0.3, -0.7, o2.data(), n);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::fabs(o1[k] - o2[k]) <= 1e-15 * (1 + std::fabs(o1[k])));

        std::vector<double> s0a(n, 1.0), sca(n, 2.0), ssa(n, 3.0);
        auto s0b = s0a, scb = sca, ssb = ssa;
        sc.accumulate_moments(base.data(), 0.6, 0.8, s0a.data(), sca.data(), ssa.data(), n);
        vx.accumulate_moments(base.data(), 0.6, 0.8, s0b.data(), scb.data(), ssb.data(), n);
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(s0a[k] == s0b[k]);
            CHECK(std::fabs(sca[k] - scb[k]) <= 1e-15 * (1 + std::fabs(sca[k])));
            CHECK(std::fabs(ssa[k] - ssb[k]) <= 1e-15 * (1 + std::fabs(ssa[k])));
        }
    }
}

TEST_CASE("active isa switches the free functions") {
    const Isa before = active_isa();
    std::mt19937_64 rng(1);
    const auto i1 = random_vector(rng, 33, 0, 1), i2 = random_vector(rng, 33, 0, 1);
    const auto zx = random_vector(rng, 33, -1, 1), zy = random_vector(rng, 33, -1, 1);
    set_active_isa(Isa::Scalar);
    CHECK(active_isa() == Isa::Scalar);
    const double a = light_objective(i1, i2, zx, zy, kLights);
    set_active_isa(best_isa());
    const double b = light_objective(i1, i2, zx, zy, kLights);
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
    if (!isa_supported(Isa::Avx2)) CHECK_THROWS_AS(set_active_isa(Isa::Avx2), std::invalid_argument);
    set_active_isa(before);
}
