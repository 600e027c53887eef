#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phpol/pixel_grid.hpp"
#include "phpol/poldecomp.hpp"
#include "phpol/simd/kernels.hpp"
#include "phpol/types.hpp"

namespace phpol::lightest {

struct SphericalLight {
    double theta = 0.0;  // polar angle, [0, pi/2)
    double alpha = 0.0;  // azimuth, [0, 2 pi)

    UnitVector3 vec() const;
    static SphericalLight from_vector(const UnitVector3& v);
};

/// T = diag(-1, -1, 1): the light pair that explains the data equally well.
UnitVector3 flip(const UnitVector3& v);

/// One of the two gradients the polarisation allows at each pixel; the other
/// is its negation. `excluded` marks pixels unusable for light estimation:
/// outside the domain, clamped degree of polarisation, or rho not
/// significantly above its noise level.
struct AmbiguousGradientField {
    GradientGrid gradient;
    PixelGrid<std::uint8_t> excluded;
    std::size_t usable = 0;
    std::size_t insignificant = 0;  // excluded for rho < min_significance * rho_se
};

/// Near-flat pixels have a degree of polarisation at the noise floor, so
/// their zenith angle (and phase) is noise. Light estimation skips pixels with
/// rho below this many standard errors.
inline constexpr double kDefaultMinSignificance = 5.0;

/// grad z = tan(theta) (sin phi, cos phi) with cos theta = f(rho, eta).
AmbiguousGradientField ambiguous_gradients(const PolarisationImage& pol, const RefractiveIndex& eta,
                                           double min_significance = kDefaultMinSignificance);

/// Flattened (pixel, colour) samples entering the objective.
struct LightObjectiveData {
    std::vector<double> i1, i2, zx, zy;
    std::size_t size() const { return i1.size(); }
};

/// Every usable pixel of a two-light image, each colour as its own sample.
LightObjectiveData objective_data(const PolarisationImage& pol, const AmbiguousGradientField& grads);

/// The two residual branches at one sample:
/// r = i1 t3 - i2 s3 + w, q = i1 t3 - i2 s3 - w with w = zx (i2 s1 - i1 t1) + zy (i2 s2 - i1 t2).
struct Residuals {
    double r, q;
};
Residuals pixel_residuals(double i1, double i2, double zx, double zy, const UnitVector3& s, const UnitVector3& t);

/// Sum over samples of min(r^2, q^2) with the active SIMD kernels.
double light_objective(const LightObjectiveData& data, const UnitVector3& s, const UnitVector3& t);
double light_objective(const LightObjectiveData& data, const UnitVector3& s, const UnitVector3& t,
                       const simd::KernelTable& kernels);

struct EstimateOptions {
    int restarts = 16;
    double max_theta = 80.0 * M_PI / 180.0;
    std::size_t subsample = 5000;
    std::size_t min_pixels = 100;
    std::uint64_t seed = 1;
    int max_iterations = 2000;
    double simplex_tolerance = 1e-10;  // simplex size at which a local search stops
};

struct RestartRecord {
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct LightEstimate {
    SphericalLight s, t;
    double objective = 0.0;  // full-data objective at (s, t)
    bool converged = false;
    std::vector<RestartRecord> restarts;
    std::size_t samples = 0;  // (pixel, colour) samples in the refinement pass

    UnitVector3 s_vec() const { return s.vec(); }
    UnitVector3 t_vec() const { return t.vec(); }
};

/// Multi-start simplex search over (theta_s, alpha_s, theta_t, alpha_t) on a
/// seeded subsample, then a refinement pass on every sample. The returned pair
/// is one of two equally good answers; the other is (T s, T t).
/// Throws ValidationError("too_few_pixels") and ValidationError("degenerate_data")
/// (identical images).
LightEstimate estimate_lights(const PolarisationImage& pol, const AmbiguousGradientField& grads,
                              const EstimateOptions& opts = {});

/// Integrated height relative to the boundary: mean over the domain minus the
/// mean over boundary pixels. Larger is more convex.
double convexity_score(const Grid& z);

struct LightPair {
    UnitVector3 s, t;
};

struct Resolution {
    LightPair lights;
    Grid height;
    int chosen = 0;  // 0 = first candidate, 1 = second
    double scores[2] = {0.0, 0.0};
    std::string warning;  // set on a tie
};

using HeightSolve = std::function<Grid(const LightPair&)>;

/// Runs the height solve for both candidates and keeps the more convex one.
Resolution resolve_ambiguity(const LightPair& first, const LightPair& second, const HeightSolve& solve);

}  // namespace phpol::lightest
