#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "phpol/types.hpp"

namespace phpol {

/// Row-major raster with a validity mask. The mask marks the reconstruction
/// domain; values at masked-out pixels are unspecified and never read by solvers.
template <typename T>
class PixelGrid {
public:
    PixelGrid() = default;
    PixelGrid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          values_(checked_size(width, height), fill),
          mask_(checked_size(width, height), 1) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T& operator()(int x, int y) { return values_[index(x, y)]; }
    const T& operator()(int x, int y) const { return values_[index(x, y)]; }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    bool valid(std::size_t i) const { return mask_[i] != 0; }
    bool valid(int x, int y) const { return contains(x, y) && mask_[index(x, y)] != 0; }
    void set_valid(std::size_t i, bool v) { mask_[i] = v ? 1 : 0; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    std::vector<std::uint8_t>& mask() { return mask_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (auto m : mask_) n += m != 0;
        return n;
    }

    template <typename U>
    bool same_shape(const PixelGrid<U>& o) const {
        return width_ == o.width() && height_ == o.height();
    }

    template <typename U>
    void copy_mask_from(const PixelGrid<U>& o) {
        if (!same_shape(o)) throw ValidationError("shape_mismatch", "grid shapes differ");
        mask_ = o.mask();
    }

private:
    static std::size_t checked_size(int w, int h) {
        if (w <= 0 || h <= 0) throw ValidationError("bad_grid_size", "grid dimensions must be positive");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> values_;
    std::vector<std::uint8_t> mask_;
};

using Grid = PixelGrid<double>;
using GradientGrid = PixelGrid<Gradient2>;
/// One grid per colour channel (or per light x colour channel).
using ChannelGrids = std::vector<Grid>;

}  // namespace phpol
