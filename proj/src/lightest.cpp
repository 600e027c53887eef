#include "phpol/lightest.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "phpol/gradient_operator.hpp"
#include "phpol/optics.hpp"

namespace phpol::lightest {

UnitVector3 SphericalLight::vec() const {
    return UnitVector3::normalised(
        {std::cos(alpha) * std::sin(theta), std::sin(alpha) * std::sin(theta), std::cos(theta)});
}

SphericalLight SphericalLight::from_vector(const UnitVector3& v) {
    SphericalLight out;
    out.theta = std::acos(std::clamp(v.z(), -1.0, 1.0));
    out.alpha = std::atan2(v.y(), v.x());
    if (out.alpha < 0.0) out.alpha += 2.0 * M_PI;
    return out;
}

UnitVector3 flip(const UnitVector3& v) { return UnitVector3::normalised({-v.x(), -v.y(), v.z()}); }

AmbiguousGradientField ambiguous_gradients(const PolarisationImage& pol, const RefractiveIndex& eta,
                                           double min_significance) {
    const bool have_se = pol.rho_se.size() == pol.rho.size();
    const int w = pol.rho.width(), h = pol.rho.height();
    AmbiguousGradientField out{GradientGrid(w, h), PixelGrid<std::uint8_t>(w, h, 0), 0};
    out.gradient.copy_mask_from(pol.rho);
    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        bool clamped = false;
        if (pol.rho.valid(p)) {
            const double f = optics::f_of_rho_clamped(pol.rho[p], eta, &clamped);
            const double theta = std::min(std::acos(std::clamp(f, -1.0, 1.0)), optics::kMaxZenith);
            const double tn = std::tan(theta);
            out.gradient[p] = {tn * std::sin(pol.phi[p]), tn * std::cos(pol.phi[p])};
            clamped = clamped || (pol.clamped.size() == pol.rho.size() && pol.clamped[p] != 0);
        }
        const bool noisy = pol.rho.valid(p) && !clamped && have_se && pol.rho[p] < min_significance * pol.rho_se[p];
        const bool excluded = !pol.rho.valid(p) || clamped || noisy;
        out.insignificant += noisy;
        out.excluded[p] = excluded ? 1 : 0;
        if (!excluded) ++out.usable;
    }
    return out;
}

LightObjectiveData objective_data(const PolarisationImage& pol, const AmbiguousGradientField& grads) {
    if (pol.lights < 2) throw ValidationError("missing_input", "light estimation needs intensities under two lights");
    if (!grads.gradient.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "gradients differ in shape");
    LightObjectiveData d;
    const int colours = pol.colours();
    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        if (grads.excluded[p]) continue;
        for (int c = 0; c < colours; ++c) {
            d.i1.push_back(pol.iun(0, c)[p]);
            d.i2.push_back(pol.iun(1, c)[p]);
            d.zx.push_back(grads.gradient[p].zx);
            d.zy.push_back(grads.gradient[p].zy);
        }
    }
    return d;
}

Residuals pixel_residuals(double i1, double i2, double zx, double zy, const UnitVector3& s, const UnitVector3& t) {
    const double u = i1 * t.z() - i2 * s.z();
    const double w = zx * (i2 * s.x() - i1 * t.x()) + zy * (i2 * s.y() - i1 * t.y());
    return {u + w, u - w};
}

double light_objective(const LightObjectiveData& data, const UnitVector3& s, const UnitVector3& t,
                       const simd::KernelTable& kernels) {
    const simd::LightCoefficients l{s.x(), s.y(), s.z(), t.x(), t.y(), t.z()};
    return kernels.light_objective(data.i1.data(), data.i2.data(), data.zx.data(), data.zy.data(), data.size(), l);
}

double light_objective(const LightObjectiveData& data, const UnitVector3& s, const UnitVector3& t) {
    return light_objective(data, s, t, simd::kernels());
}

namespace {

// theta below zero reflects through the pole; above the cap it is clamped.
SphericalLight to_light(double theta, double alpha, double cap) {
    if (theta < 0.0) {
        theta = -theta;
        alpha += M_PI;
    }
    theta = std::min(theta, cap);
    alpha = std::fmod(alpha, 2.0 * M_PI);
    if (alpha < 0.0) alpha += 2.0 * M_PI;
    return {theta, alpha};
}

struct SearchContext {
    const LightObjectiveData* data;
    double cap;
};

double search_objective(const gsl_vector* x, void* params) {
    const auto* ctx = static_cast<const SearchContext*>(params);
    const auto s = to_light(gsl_vector_get(x, 0), gsl_vector_get(x, 1), ctx->cap);
    const auto t = to_light(gsl_vector_get(x, 2), gsl_vector_get(x, 3), ctx->cap);
    return light_objective(*ctx->data, s.vec(), t.vec());
}

struct LocalResult {
    std::array<double, 4> x;
    double f;
    int iterations;
    bool converged;
};

LocalResult local_search(const SearchContext& ctx, const std::array<double, 4>& start, double step,
                         const EstimateOptions& opts) {
    gsl_multimin_function fn{&search_objective, 4, const_cast<SearchContext*>(&ctx)};
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(4), &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> ss(gsl_vector_alloc(4), &gsl_vector_free);
    for (std::size_t k = 0; k < 4; ++k) gsl_vector_set(x.get(), k, start[k]);
    gsl_vector_set_all(ss.get(), step);
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4), &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get());
    int it = 0, status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && it < opts.max_iterations) {
        ++it;
        if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), opts.simplex_tolerance);
    }
    LocalResult out{};
    for (std::size_t k = 0; k < 4; ++k) out.x[k] = gsl_vector_get(m->x, k);
    out.f = m->fval;
    out.iterations = it;
    out.converged = status == GSL_SUCCESS;
    return out;
}

LightObjectiveData subsample(const LightObjectiveData& full, std::size_t samples_per_pixel, std::size_t max_pixels,
                             std::uint64_t seed) {
    const std::size_t pixels = full.size() / samples_per_pixel;
    if (pixels <= max_pixels) return full;
    std::vector<std::size_t> order(pixels);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first max_pixels entries are a uniform sample.
    for (std::size_t k = 0; k < max_pixels; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pixels - 1);
        std::swap(order[k], order[pick(rng)]);
    }
    order.resize(max_pixels);
    std::sort(order.begin(), order.end());
    LightObjectiveData out;
    for (auto p : order) {
        for (std::size_t c = 0; c < samples_per_pixel; ++c) {
            const std::size_t k = p * samples_per_pixel + c;
            out.i1.push_back(full.i1[k]);
            out.i2.push_back(full.i2[k]);
            out.zx.push_back(full.zx[k]);
            out.zy.push_back(full.zy[k]);
        }
    }
    return out;
}

}  // namespace

LightEstimate estimate_lights(const PolarisationImage& pol, const AmbiguousGradientField& grads,
                              const EstimateOptions& opts) {
    if (grads.usable < opts.min_pixels)
        throw ValidationError("too_few_pixels", "light estimation needs at least " + std::to_string(opts.min_pixels) +
                                                    " usable pixels, got " + std::to_string(grads.usable));
    gsl_set_error_handler_off();
    const LightObjectiveData full = objective_data(pol, grads);
    double diff = 0.0, level = 0.0;
    for (std::size_t k = 0; k < full.size(); ++k) {
        diff = std::max(diff, std::fabs(full.i1[k] - full.i2[k]));
        level = std::max({level, std::fabs(full.i1[k]), std::fabs(full.i2[k])});
    }
    if (!(diff > 1e-12 * level))
        throw ValidationError("degenerate_data", "the two images are identical; the light objective is flat");

    const auto channels = static_cast<std::size_t>(pol.colours());
    const LightObjectiveData sub = subsample(full, channels, opts.subsample, opts.seed);
    const SearchContext sub_ctx{&sub, opts.max_theta};
    const SearchContext full_ctx{&full, opts.max_theta};

    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> theta_dist(0.0, opts.max_theta), alpha_dist(0.0, 2.0 * M_PI);
    LightEstimate est;
    LocalResult best{};
    best.f = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opts.restarts; ++r) {
        const std::array<double, 4> start{theta_dist(rng), alpha_dist(rng), theta_dist(rng), alpha_dist(rng)};
        const LocalResult res = local_search(sub_ctx, start, 0.3, opts);
        est.restarts.push_back({res.f, res.iterations, res.converged});
        if (res.f < best.f) best = res;
    }
    const LocalResult refined = local_search(full_ctx, best.x, 0.02, opts);
    est.s = to_light(refined.x[0], refined.x[1], opts.max_theta);
    est.t = to_light(refined.x[2], refined.x[3], opts.max_theta);
    est.objective = light_objective(full, est.s.vec(), est.t.vec());
    est.converged = refined.converged;
    est.samples = full.size();
    return est;
}

double convexity_score(const Grid& z) {
    double all = 0.0, edge = 0.0;
    std::size_t n_all = 0;
    for (std::size_t p = 0; p < z.size(); ++p) {
        if (!z.valid(p)) continue;
        all += z[p];
        ++n_all;
    }
    const auto border = boundary_pixels(z.mask(), z.width(), z.height());
    for (auto p : border) edge += z[p];
    if (n_all == 0 || border.empty()) return 0.0;
    return all / static_cast<double>(n_all) - edge / static_cast<double>(border.size());
}

Resolution resolve_ambiguity(const LightPair& first, const LightPair& second, const HeightSolve& solve) {
    Grid z0 = solve(first);
    Grid z1 = solve(second);
    Resolution out;
    out.scores[0] = convexity_score(z0);
    out.scores[1] = convexity_score(z1);
    const double scale = std::max({1.0, std::fabs(out.scores[0]), std::fabs(out.scores[1])});
    if (std::fabs(out.scores[0] - out.scores[1]) <= 1e-12 * scale) {
        out.warning = "ambiguity tie: both candidates are equally convex; keeping the first";
        out.chosen = 0;
    } else {
        out.chosen = out.scores[1] > out.scores[0] ? 1 : 0;
    }
    out.lights = out.chosen == 0 ? first : second;
    out.height = out.chosen == 0 ? std::move(z0) : std::move(z1);
    return out;
}

}  // namespace phpol::lightest
