#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

#include "phpol/pixel_grid.hpp"

namespace phpol {

enum class Stencil { Forward, Central };

/// Finite-difference gradient over the masked pixels of a raster.
///
/// Unknowns are the masked pixels in raster order. `dx` and `dy` are M x M;
/// stacked they form the 2M x M operator G. Forward differences are used where
/// the forward neighbour is in the mask, the backward difference otherwise.
/// A pixel with neither neighbour along an axis gets an empty row and is flagged.
class GradientOperator {
public:
    using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t unknowns() const { return pixel_of_unknown_.size(); }
    Stencil stencil() const { return stencil_; }

    /// -1 for pixels outside the mask.
    int unknown_of_pixel(std::size_t pixel) const { return unknown_of_pixel_[pixel]; }
    std::size_t pixel_of_unknown(std::size_t u) const { return pixel_of_unknown_[u]; }
    const std::vector<std::size_t>& pixels() const { return pixel_of_unknown_; }

    const SparseRow& dx() const { return dx_; }
    const SparseRow& dy() const { return dy_; }
    bool flagged_x(std::size_t u) const { return flagged_x_[u] != 0; }
    bool flagged_y(std::size_t u) const { return flagged_y_[u] != 0; }

    /// The 2M x M operator: x-derivative rows then y-derivative rows.
    Eigen::SparseMatrix<double> stacked() const;

    /// Applies the operator to a height grid; the result is masked like the operator.
    GradientGrid apply(const Grid& z) const;
    std::vector<std::uint8_t> mask() const;

    friend GradientOperator build_gradient_operator(const std::vector<std::uint8_t>& mask, int width,
                                                    int height, Stencil stencil);

private:
    int width_ = 0;
    int height_ = 0;
    Stencil stencil_ = Stencil::Forward;
    std::vector<int> unknown_of_pixel_;
    std::vector<std::size_t> pixel_of_unknown_;
    SparseRow dx_, dy_;
    std::vector<std::uint8_t> flagged_x_, flagged_y_;
};

/// Throws ValidationError when the mask has fewer than two pixels or is not
/// 4-connected (the single additive constant could not be shared).
GradientOperator build_gradient_operator(const std::vector<std::uint8_t>& mask, int width, int height,
                                         Stencil stencil = Stencil::Forward);

template <typename T>
GradientOperator build_gradient_operator(const PixelGrid<T>& grid, Stencil stencil = Stencil::Forward) {
    return build_gradient_operator(grid.mask(), grid.width(), grid.height(), stencil);
}

/// Masked pixels with a 4-neighbour outside the mask or the raster.
std::vector<std::size_t> boundary_pixels(const std::vector<std::uint8_t>& mask, int width, int height);

}  // namespace phpol
