#include "phpol/metrics.hpp"

#include <cmath>

#include "phpol/optics.hpp"
#include "phpol/types.hpp"

namespace phpol::eval {
namespace {

void require_congruent(const Grid& z_est, const Grid& z_gt) {
    if (!z_est.same_shape(z_gt) || z_est.mask() != z_gt.mask())
        throw ValidationError("mask_mismatch", "estimated and ground-truth heights differ in shape or mask");
}

}  // namespace

double height_rms(const Grid& z_est, const Grid& z_gt) {
    require_congruent(z_est, z_gt);
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < z_est.size(); ++p) {
        if (!z_est.valid(p)) continue;
        mean += z_est[p] - z_gt[p];
        ++n;
    }
    if (n == 0) throw ValidationError("mask_mismatch", "empty domain");
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t p = 0; p < z_est.size(); ++p) {
        if (!z_est.valid(p)) continue;
        const double d = z_est[p] - z_gt[p] - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

double normal_mae_deg(const Grid& z_est, const PixelGrid<Vec3>& n_gt, const GradientOperator& op) {
    if (!n_gt.same_shape(z_est) || n_gt.mask() != z_est.mask() || op.mask() != z_est.mask())
        throw ValidationError("mask_mismatch", "normals, height and operator differ in shape or mask");
    const GradientGrid g = op.apply(z_est);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < z_est.size(); ++p) {
        if (!z_est.valid(p)) continue;
        const Vec3 ne = optics::normal_from_gradient(g[p]).vec();
        const Vec3& ng = n_gt[p];
        const double c = ne.dot(ng) / ng.norm();
        acc += std::acos(std::clamp(c, -1.0, 1.0));
        ++n;
    }
    return n ? acc / static_cast<double>(n) * 180.0 / M_PI : 0.0;
}

Metrics compute_metrics(const Grid& z_est, const Grid& z_gt, const PixelGrid<Vec3>& n_gt, const GradientOperator& op) {
    return {height_rms(z_est, z_gt), normal_mae_deg(z_est, n_gt, op)};
}

}  // namespace phpol::eval
