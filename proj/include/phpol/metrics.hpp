#pragma once

#include "phpol/gradient_operator.hpp"
#include "phpol/pixel_grid.hpp"

namespace phpol::eval {

struct Metrics {
    double height_rms = 0.0;  // pixels, after removing the mean offset
    double normal_mae = 0.0;  // degrees
};

/// RMS of z_est - z_gt over the shared mask after subtracting their mean difference.
double height_rms(const Grid& z_est, const Grid& z_gt);

/// Mean angle between the normals of z_est (differentiated with `op`) and n_gt.
double normal_mae_deg(const Grid& z_est, const PixelGrid<Vec3>& n_gt, const GradientOperator& op);

/// Throws ValidationError("mask_mismatch") when the grids are not congruent.
Metrics compute_metrics(const Grid& z_est, const Grid& z_gt, const PixelGrid<Vec3>& n_gt, const GradientOperator& op);

}  // namespace phpol::eval
