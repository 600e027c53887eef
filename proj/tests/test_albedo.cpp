#include <doctest.h>

#include <cmath>

#include "phpol/albedo.hpp"
#include "scenes.hpp"

using namespace phpol;
using namespace phpol::albedo;

namespace {

const UnitVector3 kS = UnitVector3::normalised(1, 0, 5);
const UnitVector3 kT = UnitVector3::normalised(-1, -2, 7);

PixelGrid<Vec3> single_normal(Vec3 n) {
    PixelGrid<Vec3> g(1, 1);
    g[0] = n;
    return g;
}

ChannelGrids single(double v) { return {Grid(1, 1, v)}; }

}  // namespace

TEST_CASE("pointwise albedo matches the oracle and a brute-force scan") {
    const auto n = UnitVector3::normalised(-0.3, 0.2, 1).vec();
    const auto i1 = single(0.61), i2 = single(0.57);
    const auto a = albedo_pointwise(single_normal(n), i1, i2, kS, kT, nullptr);
    // Least-squares fit of the two Lambertian equations (tests/oracles/albedo_oracle.py).
    CHECK(a.albedo[0][0] == doctest::Approx(0.67385647157152847416).epsilon(1e-14));
    CHECK(a.undefined_count == 0);

    const double ns = n.dot(kS.vec()), nt = n.dot(kT.vec());
    auto cost = [&](double g) { return std::pow(0.61 - g * ns, 2) + std::pow(0.57 - g * nt, 2); };
    double best = 0.0, best_cost = 1e9;
    for (int k = 0; k <= 2000000; ++k) {
        const double g = k * 1e-6;
        if (cost(g) < best_cost) {
            best_cost = cost(g);
            best = g;
        }
    }
    CHECK(std::fabs(best - a.albedo[0][0]) < 1.5e-6);
}

TEST_CASE("pointwise albedo edge cases") {
    const auto n = UnitVector3::normalised(-0.3, 0.2, 1).vec();
    // One light only.
    const auto one = albedo_pointwise(single_normal(n), single(0.61), {}, kS, std::nullopt, nullptr);
    CHECK(one.albedo[0][0] == doctest::Approx(0.61 / n.dot(kS.vec())));
    // Second light grazing: only the first observation is used.
    const Vec3 side = cross(kT.vec(), Vec3{0.3, 0.1, 0.0});
    const Vec3 up = side.z < 0 ? Vec3{-side.x, -side.y, -side.z} : side;
    const auto nn = UnitVector3::normalised(up).vec();
    REQUIRE(std::fabs(nn.dot(kT.vec())) < 1e-12);
    if (nn.dot(kS.vec()) > 1e-3) {
        const auto g = albedo_pointwise(single_normal(nn), single(0.4), single(0.0), kS, kT, nullptr);
        CHECK(g.albedo[0][0] == doctest::Approx(0.4 / nn.dot(kS.vec())));
    }
    // Zero intensity means zero albedo.
    CHECK(albedo_pointwise(single_normal(n), single(0.0), single(0.0), kS, kT, nullptr).albedo[0][0] == 0.0);
    // Both lights behind the surface: undefined.
    const Vec3 away{0.95, 0.0, 0.3122};
    const auto u = albedo_pointwise(single_normal(away), single(0.2), single(0.2),
                                    UnitVector3::normalised(-1, 0, 0.2), UnitVector3::normalised(-1, 0.1, 0.2), nullptr);
    CHECK(u.undefined_count == 1);
    CHECK(u.undefined[0]);
    CHECK(u.albedo[0][0] == 0.0);
    // Specular pixels have no diffuse observation.
    SpecularMask spec(1, 1, 1);
    CHECK(albedo_pointwise(single_normal(n), single(0.61), single(0.57), kS, kT, &spec).undefined_count == 1);
}

TEST_CASE("noiseless recovery, linearity and non-negativity") {
    const auto cap = synth::render_stack(test::peak(32, 6, 9, 2, true));
    const auto op = build_gradient_operator(cap.height);
    const auto normals = normals_from_height(cap.height, op);
    const auto pol = test::truth_polarisation(cap);
    const auto a = albedo_pointwise(normals, pol.iun_of_light(0), pol.iun_of_light(1), kS, kT, nullptr);
    REQUIRE(a.albedo.size() == 2);
    for (int c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < cap.height.size(); ++p)
            CHECK(a.albedo[c][p] == doctest::Approx(cap.albedo[c][p]).epsilon(1e-6));

    ChannelGrids i1(pol.iun_of_light(0).begin(), pol.iun_of_light(0).end());
    ChannelGrids i2(pol.iun_of_light(1).begin(), pol.iun_of_light(1).end());
    for (auto* set : {&i1, &i2})
        for (auto& g : *set)
            for (std::size_t p = 0; p < g.size(); ++p) g[p] *= 1.7;
    const auto b = albedo_pointwise(normals, i1, i2, kS, kT, nullptr);
    const auto bs = albedo_with_consistency(b, i1, normals, kS, nullptr, 0.1);
    const auto as = albedo_with_consistency(a, pol.iun_of_light(0), normals, kS, nullptr, 0.1);
    for (std::size_t p = 0; p < cap.height.size(); ++p) {
        CHECK(b.albedo[0][p] == doctest::Approx(1.7 * a.albedo[0][p]).epsilon(1e-12));
        CHECK(bs.albedo[1][p] == doctest::Approx(1.7 * as.albedo[1][p]).epsilon(1e-9));
        CHECK(as.albedo[0][p] >= 0.0);
    }
}

TEST_CASE("lambda zero returns the pointwise map") {
    const auto cap = synth::render_stack(test::peak(16, 3, 5, 1, true));
    const auto op = build_gradient_operator(cap.height);
    const auto normals = normals_from_height(cap.height, op);
    const auto pol = test::truth_polarisation(cap);
    const auto a = albedo_pointwise(normals, pol.iun_of_light(0), pol.iun_of_light(1), kS, kT, nullptr);
    const auto s = albedo_with_consistency(a, pol.iun_of_light(0), normals, kS, nullptr, 0.0);
    for (std::size_t p = 0; p < a.albedo[0].size(); ++p) CHECK(s.albedo[0][p] == a.albedo[0][p]);
}

TEST_CASE("a specular hole in uniform albedo is filled from its surround") {
    const auto cap = synth::render_stack(test::peak(32, 6, 9));
    const auto op = build_gradient_operator(cap.height);
    const auto normals = normals_from_height(cap.height, op);
    const auto pol = test::truth_polarisation(cap);
    SpecularMask spec(32, 32, 0);
    for (int y = 13; y < 18; ++y)
        for (int x = 12; x < 17; ++x) spec(x, y) = 1;
    const auto a = albedo_pointwise(normals, pol.iun_of_light(0), pol.iun_of_light(1), kS, kT, &spec);
    CHECK(a.undefined_count == 25);
    const auto s = albedo_with_consistency(a, pol.iun_of_light(0), normals, kS, &spec, 0.1);
    for (int y = 13; y < 18; ++y)
        for (int x = 12; x < 17; ++x) CHECK(s.albedo[0](x, y) == doctest::Approx(0.8).epsilon(0.01));
    CHECK(s.albedo[0](3, 3) == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("normals of a height map") {
    synth::SurfaceParams plane;
    plane.kind = synth::SurfaceKind::Plane;
    plane.plane_a = 0.5;
    plane.plane_b = -0.25;
    const Grid z = synth::make_surface(plane, 6, 5);
    const auto n = normals_from_height(z, build_gradient_operator(z));
    const auto expect = UnitVector3::normalised(-0.5, 0.25, 1).vec();
    for (std::size_t p = 0; p < n.size(); ++p) {
        CHECK(n[p].x == doctest::Approx(expect.x));
        CHECK(n[p].y == doctest::Approx(expect.y));
        CHECK(n[p].z == doctest::Approx(expect.z));
    }
}
