#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "phpol/poldecomp.hpp"
#include "phpol/synth.hpp"

using namespace phpol;

namespace {

std::vector<Grid> pixel_stack(const std::vector<double>& values) {
    std::vector<Grid> out;
    for (double v : values) out.emplace_back(1, 1, v);
    return out;
}

std::vector<double> deg(std::initializer_list<double> d) {
    std::vector<double> out;
    for (double x : d) out.push_back(x * M_PI / 180);
    return out;
}

double phase_distance(double a, double b) {
    const double d = std::fabs(a - b);
    return std::min(d, M_PI - d);
}

synth::SceneConfig six_channel_scene(double sigma, int bit_depth, std::uint64_t seed) {
    synth::SceneConfig cfg;
    cfg.height = synth::make_surface({}, 40, 40);
    synth::AlbedoParams ap;
    ap.levels = {0.9, 0.6, 0.35};
    cfg.albedo = synth::make_albedo(ap, 40, 40, 3);
    cfg.lights = {UnitVector3::normalised(1, 0, 5), UnitVector3::normalised(-1, -2, 7)};
    cfg.polariser_angles = synth::angle_schedule_deg(0, 10, 18);
    cfg.noise_sigma = sigma;
    cfg.bit_depth = bit_depth;
    cfg.seed = seed;
    return cfg;
}

// Joint-fit oracle from tests/oracles/decomp_oracle.py.
constexpr double kOracleIun[] = {0.60181717219050830654, 0.34868177804143858278};
constexpr double kOracleRho = 0.20025223238912766923;
constexpr double kOraclePhi = 0.68873154276884068225;
constexpr double kOracleObjective = 0.00049437173130804424929;

}  // namespace

TEST_CASE("three-angle closed form") {
    const auto samples = pixel_stack({1.25, 1.0 + 0.5 * std::cos(M_PI / 6), 0.75});
    const auto angles = deg({0, 45, 90});
    const auto pol = poldecomp::fit_single_channel(samples, angles);
    CHECK(pol.i_un[0][0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pol.rho[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pol.phi[0] == doctest::Approx(M_PI / 6).epsilon(1e-14));
}

TEST_CASE("constant samples have zero polarisation and phase zero") {
    const auto pol = poldecomp::fit_single_channel(pixel_stack({0.4, 0.4, 0.4, 0.4}), deg({0, 45, 90, 135}));
    CHECK(pol.i_un[0][0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(pol.rho[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(pol.phi[0] == 0.0);
}

TEST_CASE("two distinct angles are degenerate") {
    CHECK_THROWS_AS(poldecomp::fit_single_channel(pixel_stack({1, 2, 1}), deg({0, 90, 180})), ValidationError);
    CHECK_THROWS_AS(poldecomp::fit_single_channel(pixel_stack({1, 2}), deg({0, 90})), ValidationError);
}

TEST_CASE("alternating fit reaches the joint least-squares oracle") {
    const auto angles = deg({0, 30, 60, 90, 120, 150});
    std::vector<double> samples, c2, s2;
    for (double a : angles) {
        c2.push_back(std::cos(2 * a));
        s2.push_back(std::sin(2 * a));
    }
    const double iun[] = {0.6, 0.35};
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < angles.size(); ++j)
            samples.push_back(iun[c] * (1 + 0.2 * std::cos(2 * angles[j] - 1.4)) +
                              0.01 * std::sin(1.7 * (c * 6 + static_cast<int>(j)) + 0.3));
    poldecomp::FitOptions opts;
    opts.relative_tolerance = 1e-15;
    opts.max_iterations = 2000;
    const auto fit = poldecomp::fit_pixel(samples, 2, c2, s2, 0.0, 0.0, opts, true);
    CHECK(fit.converged);
    CHECK(fit.i_un[0] == doctest::Approx(kOracleIun[0]).epsilon(1e-9));
    CHECK(fit.i_un[1] == doctest::Approx(kOracleIun[1]).epsilon(1e-9));
    CHECK(std::hypot(fit.a, fit.b) == doctest::Approx(kOracleRho).epsilon(1e-9));
    double phi = 0.5 * std::atan2(fit.b, fit.a);
    if (phi < 0) phi += M_PI;
    CHECK(phi == doctest::Approx(kOraclePhi).epsilon(1e-9));
    CHECK(poldecomp::objective(samples, 2, c2, s2, fit.i_un, fit.a, fit.b) ==
          doctest::Approx(kOracleObjective).epsilon(1e-9));
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
        CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] * (1 + 1e-14));
}

TEST_CASE("single channel multichannel fit is a fixed point of the linear fit") {
    auto cfg = six_channel_scene(0.02, 8, 4);
    cfg.lights.resize(1);
    cfg.albedo.resize(1);
    const auto cap = synth::render_stack(cfg);
    const auto lin = poldecomp::fit_single_channel(cap.stack.images, cap.stack.angles);
    const auto alt = poldecomp::fit_multichannel(cap.stack);
    for (std::size_t p = 0; p < lin.rho.size(); ++p) {
        if (!lin.rho.valid(p)) continue;
        CHECK(std::fabs(alt.rho[p] - lin.rho[p]) < 1e-6);
        CHECK(std::fabs(alt.i_un[0][p] - lin.i_un[0][p]) < 1e-6);
    }
}

TEST_CASE("noiseless six channel stack is recovered exactly with monotone alternation") {
    const auto cap = synth::render_stack(six_channel_scene(0.0, 0, 1));
    poldecomp::FitReport report;
    const auto pol = poldecomp::fit_multichannel(cap.stack, {}, &report);
    CHECK(pol.i_un.size() == 6);
    CHECK(report.monotonicity_violations == 0);
    CHECK(report.nonconverged_pixels == 0);
    double worst_rho = 0, worst_phi = 0;
    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        REQUIRE(pol.rho.valid(p));
        worst_rho = std::max(worst_rho, std::fabs(pol.rho[p] - cap.rho[p]));
        if (cap.rho[p] > 1e-3) worst_phi = std::max(worst_phi, phase_distance(pol.phi[p], cap.phi[p]));
    }
    CHECK(worst_rho < 1e-8);
    CHECK(worst_phi < 1e-8);
}

TEST_CASE("half-step objective never increases on noisy data") {
    const auto cap = synth::render_stack(six_channel_scene(0.02, 8, 12));
    const std::size_t P = cap.stack.angle_count();
    std::vector<double> c2, s2;
    for (double a : cap.stack.angles) {
        c2.push_back(std::cos(2 * a));
        s2.push_back(std::sin(2 * a));
    }
    for (std::size_t p = 0; p < cap.height.size(); p += 37) {
        std::vector<double> x;
        for (int c = 0; c < 6; ++c)
            for (std::size_t j = 0; j < P; ++j) x.push_back(cap.stack.at(c, j)[p]);
        const auto fit = poldecomp::fit_pixel(x, 6, c2, s2, 0.1, -0.05, {}, true);
        CHECK(fit.monotone);
        for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
            CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] + 1e-12 * fit.objective_trace.front());
    }
}

TEST_CASE("rotating the polariser schedule rotates the phase") {
    auto cfg = six_channel_scene(0.0, 0, 1);
    const auto base = synth::render_stack(cfg);
    const double delta = 0.3;
    PolariserStack shifted = base.stack;
    for (auto& a : shifted.angles) a -= delta;  // same samples seen through rotated angles
    const auto p0 = poldecomp::fit_multichannel(base.stack);
    const auto p1 = poldecomp::fit_multichannel(shifted);
    for (std::size_t p = 0; p < p0.rho.size(); p += 3) {
        CHECK(p1.rho[p] == doctest::Approx(p0.rho[p]).epsilon(1e-9));
        if (p0.rho[p] > 1e-3) {
            double expect = std::fmod(p0.phi[p] - delta + 2 * M_PI, M_PI);
            CHECK(phase_distance(p1.phi[p], expect) < 1e-9);
        }
        CHECK(p1.i_un[2][p] == doctest::Approx(p0.i_un[2][p]).epsilon(1e-9));
    }
}

TEST_CASE("scaling a channel scales its intensity and leaves rho alone") {
    auto cap = synth::render_stack(six_channel_scene(0.0, 0, 1));
    const auto p0 = poldecomp::fit_multichannel(cap.stack);
    for (std::size_t j = 0; j < cap.stack.angle_count(); ++j)
        for (auto& v : cap.stack.at(4, j).values()) v *= 0.5;
    const auto p1 = poldecomp::fit_multichannel(cap.stack);
    for (std::size_t p = 0; p < p0.rho.size(); p += 3) {
        CHECK(p1.rho[p] == doctest::Approx(p0.rho[p]).epsilon(1e-9));
        CHECK(p1.i_un[4][p] == doctest::Approx(0.5 * p0.i_un[4][p]).epsilon(1e-9));
    }
}

TEST_CASE("dark pixels leave the domain and rho is clamped below one") {
    std::vector<Grid> samples;
    for (double v : {0.5, 0.0, 0.5, 1.0}) {
        Grid g(2, 1, 0.0);
        g[0] = v;       // fully polarised pixel
        g[1] = 1e-6;    // dark pixel
        samples.push_back(g);
    }
    poldecomp::FitReport report;
    const auto pol = poldecomp::fit_single_channel(samples, deg({0, 45, 90, 135}), {}, &report);
    CHECK_FALSE(pol.rho.valid(1));
    CHECK(report.masked_pixels == 1);
    REQUIRE(pol.rho.valid(0));
    CHECK(pol.clamped[0] == 1);
    CHECK(pol.rho[0] < 1.0);
    CHECK(report.clamped_pixels == 1);
}

TEST_CASE("noise level and rho standard error follow the injected noise") {
    auto cfg = six_channel_scene(0.01, 0, 2);
    const auto cap = synth::render_stack(cfg);
    const auto pol = poldecomp::fit_multichannel(cap.stack);
    CHECK(pol.noise_sigma == doctest::Approx(0.01).epsilon(0.08));
    // Standard error against the spread of rho errors over the raster.
    double z2 = 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        if (cap.rho[p] < 0.01) continue;  // away from the rho >= 0 fold
        const double z = (pol.rho[p] - cap.rho[p]) / pol.rho_se[p];
        z2 += z * z;
        ++n;
    }
    REQUIRE(n > 200);
    CHECK(std::sqrt(z2 / n) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("stack shape is validated") {
    auto cap = synth::render_stack(six_channel_scene(0.0, 8, 1));
    cap.stack.images.pop_back();
    CHECK_THROWS_AS(poldecomp::fit_multichannel(cap.stack), ValidationError);
}
