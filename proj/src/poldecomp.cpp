#include "phpol/poldecomp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "phpol/simd/kernels.hpp"

namespace phpol {

PolarisationImage combine_lights(const PolarisationImage& first, const PolarisationImage& second) {
    if (first.lights != 1 || second.lights != 1)
        throw ValidationError("bad_polarisation_image", "combine_lights expects two single-light images");
    if (first.i_un.size() != second.i_un.size() || !first.rho.same_shape(second.rho))
        throw ValidationError("shape_mismatch", "polarisation images differ in shape or channel count");
    PolarisationImage out = first;
    out.lights = 2;
    for (const auto& g : second.i_un) out.i_un.push_back(g);
    for (std::size_t p = 0; p < out.rho.size(); ++p) {
        const bool v = first.rho.valid(p) && second.rho.valid(p);
        out.rho.set_valid(p, v);
        out.phi.set_valid(p, v);
        if (out.rho_se.size() == out.rho.size()) out.rho_se.set_valid(p, v);
        for (auto& g : out.i_un) g.set_valid(p, v);
    }
    return out;
}

namespace poldecomp {
namespace {

void require_distinct_angles(std::span<const double> angles) {
    std::vector<double> folded;
    for (double a : angles) {
        double f = std::fmod(a, M_PI);
        if (f < 0.0) f += M_PI;
        if (M_PI - f < 1e-9) f = 0.0;
        folded.push_back(f);
    }
    std::sort(folded.begin(), folded.end());
    std::size_t distinct = folded.empty() ? 0 : 1;
    for (std::size_t i = 1; i < folded.size(); ++i)
        if (folded[i] - folded[i - 1] > 1e-9) ++distinct;
    if (distinct < 3)
        throw ValidationError("degenerate_fit", "need at least three polariser angles distinct modulo 180 degrees");
}

double fold_phase(double a, double b) {
    double phi = 0.5 * std::atan2(b, a);
    if (phi < 0.0) phi += M_PI;
    if (phi >= M_PI) phi -= M_PI;
    return phi;
}

struct RhoPhi {
    double rho, phi;
    bool clamped;
};

RhoPhi to_rho_phi(double a, double b, double ceiling) {
    double rho = std::hypot(a, b);
    bool clamped = false;
    if (rho > ceiling) {
        rho = ceiling;
        clamped = true;
    }
    // Below rounding level the phase is undefined; report 0.
    return {rho, rho > 1e-12 ? fold_phase(a, b) : 0.0, clamped};
}

PolarisationImage empty_image(int w, int h, int channels, int lights) {
    PolarisationImage out;
    out.i_un.assign(static_cast<std::size_t>(channels), Grid(w, h));
    out.rho = Grid(w, h);
    out.phi = Grid(w, h);
    out.clamped = PixelGrid<std::uint8_t>(w, h);
    out.rho_se = Grid(w, h);
    out.lights = lights;
    return out;
}

void set_pixel_valid(PolarisationImage& img, std::size_t p, bool v) {
    img.rho.set_valid(p, v);
    img.phi.set_valid(p, v);
    img.clamped.set_valid(p, v);
    img.rho_se.set_valid(p, v);
    for (auto& g : img.i_un) g.set_valid(p, v);
}

// The median per-pixel residual level is the noise estimate; rho's standard
// error at a pixel then follows from the fit's design (k = sum of squared i_un).
void finish_noise(PolarisationImage& img, std::vector<double>& sigma_px, const std::vector<double>& design) {
    std::vector<double> level;
    for (std::size_t p = 0; p < sigma_px.size(); ++p)
        if (img.rho.valid(p)) level.push_back(sigma_px[p]);
    if (level.empty()) return;
    std::nth_element(level.begin(), level.begin() + static_cast<std::ptrdiff_t>(level.size() / 2), level.end());
    img.noise_sigma = level[level.size() / 2];
    for (std::size_t p = 0; p < sigma_px.size(); ++p)
        if (img.rho.valid(p)) img.rho_se[p] = design[p] > 0.0 ? img.noise_sigma / std::sqrt(design[p]) : 0.0;
}

}  // namespace

double objective(std::span<const double> samples, int channels, std::span<const double> cos2,
                 std::span<const double> sin2, std::span<const double> i_un, double a, double b) {
    const std::size_t p = cos2.size();
    double e = 0.0;
    for (int c = 0; c < channels; ++c) {
        for (std::size_t j = 0; j < p; ++j) {
            const double r = samples[c * p + j] - i_un[c] * (1.0 + a * cos2[j] + b * sin2[j]);
            e += r * r;
        }
    }
    return e;
}

PixelFit fit_pixel(std::span<const double> samples, int channels, std::span<const double> cos2,
                   std::span<const double> sin2, double a0, double b0, const FitOptions& opts,
                   bool keep_trace) {
    const std::size_t p = cos2.size();
    PixelFit fit;
    fit.i_un.assign(static_cast<std::size_t>(channels), 0.0);
    fit.a = a0;
    fit.b = b0;

    double energy = 0.0;
    for (double v : samples) energy += v * v;
    const double slack = 1e-12 * energy;
    const double floor = 1e-28 * energy;

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opts.max_iterations; ++it) {
        fit.iterations = it;

        // (a) rho, phi fixed: each channel's i_un decouples into a 1-D least squares.
        double ww = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double w = 1.0 + fit.a * cos2[j] + fit.b * sin2[j];
            ww += w * w;
        }
        for (int c = 0; c < channels; ++c) {
            double wy = 0.0;
            for (std::size_t j = 0; j < p; ++j) wy += (1.0 + fit.a * cos2[j] + fit.b * sin2[j]) * samples[c * p + j];
            fit.i_un[c] = ww > 0.0 ? wy / ww : 0.0;
        }
        const double ea = objective(samples, channels, cos2, sin2, fit.i_un, fit.a, fit.b);

        // (b) i_un fixed: (a, b) from all channels at once.
        double k = 0.0, rc = 0.0, rs = 0.0;
        double cc = 0.0, cs = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            cc += cos2[j] * cos2[j];
            cs += cos2[j] * sin2[j];
            ss += sin2[j] * sin2[j];
        }
        for (int c = 0; c < channels; ++c) {
            const double i = fit.i_un[c];
            k += i * i;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = samples[c * p + j] - i;
                rc += i * d * cos2[j];
                rs += i * d * sin2[j];
            }
        }
        const double det = k * k * (cc * ss - cs * cs);
        if (det > 0.0 && std::isfinite(det)) {
            fit.a = k * (ss * rc - cs * rs) / det;
            fit.b = k * (cc * rs - cs * rc) / det;
        }
        const double eb = objective(samples, channels, cos2, sin2, fit.i_un, fit.a, fit.b);

        if (ea > prev + slack || eb > ea + slack) fit.monotone = false;
        if (keep_trace) {
            fit.objective_trace.push_back(ea);
            fit.objective_trace.push_back(eb);
        }
        if (eb <= floor || (std::isfinite(prev) && prev - eb <= opts.relative_tolerance * prev)) {
            fit.converged = true;
            break;
        }
        prev = eb;
    }
    return fit;
}

PolarisationImage fit_single_channel(std::span<const Grid> samples, std::span<const double> angles,
                                     const FitOptions& opts, FitReport* report) {
    if (samples.size() != angles.size())
        throw ValidationError("bad_stack", "one sample image per polariser angle is required");
    require_distinct_angles(angles);
    const int w = samples.front().width(), h = samples.front().height();
    for (const auto& s : samples)
        if (!s.same_shape(samples.front())) throw ValidationError("shape_mismatch", "stack images differ in shape");

    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    const std::size_t n = samples.front().size();
    std::vector<double> s0(n, 0.0), sc(n, 0.0), ss(n, 0.0);
    for (std::size_t j = 0; j < angles.size(); ++j) {
        const double c = std::cos(2.0 * angles[j]), s = std::sin(2.0 * angles[j]);
        const Eigen::Vector3d row(1.0, c, s);
        normal += row * row.transpose();
        simd::accumulate_moments(samples[j].values(), c, s, s0, sc, ss);
    }
    const Eigen::Matrix3d inv = normal.inverse();

    double cc = 0.0, ssum = 0.0;
    for (double a : angles) {
        cc += std::cos(2.0 * a) * std::cos(2.0 * a);
        ssum += std::sin(2.0 * a) * std::sin(2.0 * a);
    }
    const double dof = static_cast<double>(angles.size()) - 3.0;
    std::vector<double> sigma_px(n, 0.0), design(n, 0.0);

    FitReport local;
    PolarisationImage out = empty_image(w, h, 1, 1);
    for (std::size_t p = 0; p < n; ++p) {
        bool valid = true;
        for (const auto& s : samples) valid = valid && s.valid(p);
        if (!valid) {
            set_pixel_valid(out, p, false);
            continue;
        }
        const Eigen::Vector3d x = inv * Eigen::Vector3d(s0[p], sc[p], ss[p]);
        if (!(x[0] > 0.0)) ++local.degenerate_pixels;
        if (!(x[0] >= opts.min_intensity)) {
            ++local.masked_pixels;
            set_pixel_valid(out, p, false);
            continue;
        }
        const RhoPhi rp = to_rho_phi(x[1] / x[0], x[2] / x[0], opts.rho_ceiling);
        out.i_un[0][p] = x[0];
        out.rho[p] = rp.rho;
        out.phi[p] = rp.phi;
        out.clamped[p] = rp.clamped ? 1 : 0;
        local.clamped_pixels += rp.clamped;
        if (dof > 0.0) {
            double rss = 0.0;
            for (std::size_t j = 0; j < angles.size(); ++j) {
                const double r = samples[j][p] - x[0] - x[1] * std::cos(2.0 * angles[j]) - x[2] * std::sin(2.0 * angles[j]);
                rss += r * r;
            }
            sigma_px[p] = std::sqrt(rss / dof);
        }
        design[p] = x[0] * x[0] * 0.5 * (cc + ssum);
    }
    finish_noise(out, sigma_px, design);
    if (report) *report = local;
    return out;
}

PolarisationImage fit_multichannel(const PolariserStack& stack, const FitOptions& opts, FitReport* report,
                                   const PolarisationImage* init) {
    const int channels = stack.channels();
    const std::size_t nang = stack.angle_count();
    if (channels < 1 || stack.images.size() != static_cast<std::size_t>(channels) * nang)
        throw ValidationError("bad_stack", "stack image count does not match lights x colours x angles");
    require_distinct_angles(stack.angles);
    const int w = stack.images.front().width(), h = stack.images.front().height();
    const std::size_t n = stack.images.front().size();

    FitReport local;
    PolarisationImage seed;
    if (init) {
        if (!init->rho.same_shape(stack.images.front()))
            throw ValidationError("shape_mismatch", "initial polarisation image differs in shape");
        seed = *init;
    } else {
        int best = 0;
        double best_mean = -1.0;
        for (int c = 0; c < channels; ++c) {
            double sum = 0.0;
            for (std::size_t j = 0; j < nang; ++j)
                for (double v : stack.at(c, j).values()) sum += v;
            if (sum > best_mean) {
                best_mean = sum;
                best = c;
            }
        }
        local.init_channel = best;
        std::vector<Grid> single;
        for (std::size_t j = 0; j < nang; ++j) single.push_back(stack.at(best, j));
        seed = fit_single_channel(single, stack.angles, opts);
    }

    std::vector<double> cos2(nang), sin2(nang);
    for (std::size_t j = 0; j < nang; ++j) {
        cos2[j] = std::cos(2.0 * stack.angles[j]);
        sin2[j] = std::sin(2.0 * stack.angles[j]);
    }

    double cc = 0.0, ssum = 0.0;
    for (std::size_t j = 0; j < nang; ++j) {
        cc += cos2[j] * cos2[j];
        ssum += sin2[j] * sin2[j];
    }
    const double dof = static_cast<double>(channels) * static_cast<double>(nang) - channels - 2.0;
    std::vector<double> sigma_px(n, 0.0), design(n, 0.0);

    PolarisationImage out = empty_image(w, h, channels, stack.lights);
    std::vector<double> samples(static_cast<std::size_t>(channels) * nang);
    for (std::size_t p = 0; p < n; ++p) {
        bool valid = true;
        for (const auto& img : stack.images) valid = valid && img.valid(p);
        if (!valid) {
            set_pixel_valid(out, p, false);
            continue;
        }
        for (int c = 0; c < channels; ++c)
            for (std::size_t j = 0; j < nang; ++j) samples[c * nang + j] = stack.at(c, j)[p];

        // Pixels the seed fit dropped (dark in the seed channel) start unpolarised.
        double a0 = 0.0, b0 = 0.0;
        if (seed.rho.valid(p)) {
            a0 = seed.rho[p] * std::cos(2.0 * seed.phi[p]);
            b0 = seed.rho[p] * std::sin(2.0 * seed.phi[p]);
        }
        const PixelFit fit = fit_pixel(samples, channels, cos2, sin2, a0, b0, opts);
        local.max_iterations_used = std::max(local.max_iterations_used, fit.iterations);
        local.nonconverged_pixels += !fit.converged;
        local.monotonicity_violations += !fit.monotone;

        double brightest = -std::numeric_limits<double>::infinity();
        for (double v : fit.i_un) brightest = std::max(brightest, v);
        if (!(brightest > 0.0)) ++local.degenerate_pixels;
        if (!(brightest >= opts.min_intensity)) {
            ++local.masked_pixels;
            set_pixel_valid(out, p, false);
            continue;
        }
        const RhoPhi rp = to_rho_phi(fit.a, fit.b, opts.rho_ceiling);
        for (int c = 0; c < channels; ++c) out.i_un[static_cast<std::size_t>(c)][p] = std::max(0.0, fit.i_un[c]);
        out.rho[p] = rp.rho;
        out.phi[p] = rp.phi;
        out.clamped[p] = rp.clamped ? 1 : 0;
        local.clamped_pixels += rp.clamped;
        if (dof > 0.0) sigma_px[p] = std::sqrt(objective(samples, channels, cos2, sin2, fit.i_un, fit.a, fit.b) / dof);
        double k = 0.0;
        for (double v : fit.i_un) k += v * v;
        design[p] = k * 0.5 * (cc + ssum);
    }
    finish_noise(out, sigma_px, design);
    if (report) *report = local;
    return out;
}

}  // namespace poldecomp
}  // namespace phpol
