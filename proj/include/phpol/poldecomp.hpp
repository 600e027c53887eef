#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phpol/pixel_grid.hpp"
#include "phpol/synth.hpp"

namespace phpol {

/// Per-pixel unpolarised intensity (one grid per channel, light-major like
/// PolariserStack), degree of polarisation and phase angle shared by every channel.
/// The mask of `rho` is the reconstruction domain.
struct PolarisationImage {
    ChannelGrids i_un;
    Grid rho;
    Grid phi;                        // [0, pi)
    PixelGrid<std::uint8_t> clamped;  // rho had to be clamped below 1
    Grid rho_se;                      // standard error of rho from the fit residuals (may be empty)
    double noise_sigma = 0.0;         // robust estimate of the per-sample noise
    int lights = 1;

    int colours() const { return static_cast<int>(i_un.size()) / lights; }
    const Grid& iun(int light, int colour) const { return i_un[static_cast<std::size_t>(light * colours() + colour)]; }
    std::span<const Grid> iun_of_light(int light) const {
        return std::span<const Grid>(i_un).subspan(static_cast<std::size_t>(light * colours()),
                                                   static_cast<std::size_t>(colours()));
    }
    const std::vector<std::uint8_t>& mask() const { return rho.mask(); }
};

/// Two single-light polarisation images merged into one two-light image;
/// rho and phi are taken from the first.
PolarisationImage combine_lights(const PolarisationImage& first, const PolarisationImage& second);

namespace poldecomp {

struct FitOptions {
    double rho_ceiling = 1.0 - 1e-6;
    double min_intensity = 1e-4;      // pixels below this (all channels) leave the domain
    double relative_tolerance = 1e-8;  // alternation stops on a smaller relative decrease
    int max_iterations = 200;
};

struct FitReport {
    std::size_t degenerate_pixels = 0;   // fitted i_un <= 0
    std::size_t masked_pixels = 0;       // dropped for low intensity (includes degenerate)
    std::size_t clamped_pixels = 0;
    std::size_t nonconverged_pixels = 0;
    std::size_t monotonicity_violations = 0;
    int max_iterations_used = 0;
    int init_channel = 0;
};

/// Linear least-squares sinusoid fit in (i_un, i_un a, i_un b) for one channel.
/// Throws ValidationError("degenerate_fit") when fewer than three angles are
/// distinct modulo 180 degrees.
PolarisationImage fit_single_channel(std::span<const Grid> samples, std::span<const double> angles,
                                     const FitOptions& opts = {}, FitReport* report = nullptr);

/// Joint fit over every channel of the stack: rho and phi shared, i_un per
/// channel. Initialised from the single-channel fit of `init`'s rho/phi when
/// given, otherwise of the brightest channel; then alternates the closed-form
/// per-channel i_un update with the two-unknown (a, b) update.
PolarisationImage fit_multichannel(const PolariserStack& stack, const FitOptions& opts = {},
                                   FitReport* report = nullptr, const PolarisationImage* init = nullptr);

/// Result of the alternation at one pixel.
struct PixelFit {
    std::vector<double> i_un;
    double a = 0.0;
    double b = 0.0;
    int iterations = 0;
    bool converged = false;
    bool monotone = true;
    std::vector<double> objective_trace;  // value after every half-step
};

/// Alternating minimisation at one pixel. `samples` is channel-major
/// (channel * P + j); `cos2`/`sin2` are cos/sin of twice the polariser angles.
PixelFit fit_pixel(std::span<const double> samples, int channels, std::span<const double> cos2,
                   std::span<const double> sin2, double a0, double b0, const FitOptions& opts,
                   bool keep_trace = false);

/// Sum over channels and angles of (sample - i_un (1 + a cos2 + b sin2))^2.
double objective(std::span<const double> samples, int channels, std::span<const double> cos2,
                 std::span<const double> sin2, std::span<const double> i_un, double a, double b);

}  // namespace poldecomp
}  // namespace phpol
