#include "phpol/gradient_operator.hpp"

#include <Eigen/Sparse>

#include <queue>

namespace phpol {
namespace {

bool connected(const std::vector<std::uint8_t>& mask, int w, int h, std::size_t start, std::size_t count) {
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::queue<std::size_t> todo;
    todo.push(start);
    seen[start] = 1;
    std::size_t reached = 0;
    while (!todo.empty()) {
        const std::size_t p = todo.front();
        todo.pop();
        ++reached;
        const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
            if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
            const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
            if (mask[q] && !seen[q]) {
                seen[q] = 1;
                todo.push(q);
            }
        }
    }
    return reached == count;
}

}  // namespace

GradientOperator build_gradient_operator(const std::vector<std::uint8_t>& mask, int width, int height,
                                         Stencil stencil) {
    if (width <= 0 || height <= 0 || mask.size() != static_cast<std::size_t>(width) * height)
        throw ValidationError("shape_mismatch", "mask size does not match the raster");

    GradientOperator op;
    op.width_ = width;
    op.height_ = height;
    op.stencil_ = stencil;
    op.unknown_of_pixel_.assign(mask.size(), -1);
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        op.unknown_of_pixel_[p] = static_cast<int>(op.pixel_of_unknown_.size());
        op.pixel_of_unknown_.push_back(p);
    }
    const std::size_t m = op.pixel_of_unknown_.size();
    if (m < 2) throw ValidationError("empty_domain", "reconstruction domain needs at least two pixels");
    if (!connected(mask, width, height, op.pixel_of_unknown_.front(), m))
        throw ValidationError("disconnected_domain", "reconstruction domain is not 4-connected");

    auto inside = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < width && y < height && mask[static_cast<std::size_t>(y) * width + x];
    };
    auto unknown = [&](int x, int y) { return op.unknown_of_pixel_[static_cast<std::size_t>(y) * width + x]; };

    std::vector<Eigen::Triplet<double>> tx, ty;
    tx.reserve(2 * m);
    ty.reserve(2 * m);
    op.flagged_x_.assign(m, 0);
    op.flagged_y_.assign(m, 0);

    // Emits one derivative row along (dx, dy) for unknown u at (x, y).
    auto emit = [&](std::vector<Eigen::Triplet<double>>& t, std::vector<std::uint8_t>& flags, int u, int x,
                    int y, int ddx, int ddy) {
        const bool fwd = inside(x + ddx, y + ddy);
        const bool bwd = inside(x - ddx, y - ddy);
        if (stencil == Stencil::Central && fwd && bwd) {
            t.emplace_back(u, unknown(x + ddx, y + ddy), 0.5);
            t.emplace_back(u, unknown(x - ddx, y - ddy), -0.5);
        } else if (fwd) {
            t.emplace_back(u, unknown(x + ddx, y + ddy), 1.0);
            t.emplace_back(u, u, -1.0);
        } else if (bwd) {
            t.emplace_back(u, u, 1.0);
            t.emplace_back(u, unknown(x - ddx, y - ddy), -1.0);
        } else {
            flags[u] = 1;
        }
    };

    for (std::size_t u = 0; u < m; ++u) {
        const std::size_t p = op.pixel_of_unknown_[u];
        const int x = static_cast<int>(p % width), y = static_cast<int>(p / width);
        emit(tx, op.flagged_x_, static_cast<int>(u), x, y, 1, 0);
        emit(ty, op.flagged_y_, static_cast<int>(u), x, y, 0, 1);
    }
    op.dx_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    op.dy_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    op.dx_.setFromTriplets(tx.begin(), tx.end());
    op.dy_.setFromTriplets(ty.begin(), ty.end());
    return op;
}

Eigen::SparseMatrix<double> GradientOperator::stacked() const {
    const auto m = static_cast<Eigen::Index>(unknowns());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(dx_.nonZeros() + dy_.nonZeros()));
    for (Eigen::Index r = 0; r < m; ++r) {
        for (SparseRow::InnerIterator it(dx_, r); it; ++it) t.emplace_back(r, it.col(), it.value());
        for (SparseRow::InnerIterator it(dy_, r); it; ++it) t.emplace_back(m + r, it.col(), it.value());
    }
    Eigen::SparseMatrix<double> g(2 * m, m);
    g.setFromTriplets(t.begin(), t.end());
    return g;
}

GradientGrid GradientOperator::apply(const Grid& z) const {
    if (z.width() != width_ || z.height() != height_)
        throw ValidationError("shape_mismatch", "height grid does not match the gradient operator");
    Eigen::VectorXd zv(static_cast<Eigen::Index>(unknowns()));
    for (std::size_t u = 0; u < unknowns(); ++u) zv[static_cast<Eigen::Index>(u)] = z[pixel_of_unknown_[u]];
    const Eigen::VectorXd gx = dx_ * zv;
    const Eigen::VectorXd gy = dy_ * zv;
    GradientGrid out(width_, height_);
    for (std::size_t p = 0; p < out.size(); ++p) out.set_valid(p, unknown_of_pixel_[p] >= 0);
    for (std::size_t u = 0; u < unknowns(); ++u)
        out[pixel_of_unknown_[u]] = {gx[static_cast<Eigen::Index>(u)], gy[static_cast<Eigen::Index>(u)]};
    return out;
}

std::vector<std::uint8_t> GradientOperator::mask() const {
    std::vector<std::uint8_t> m(unknown_of_pixel_.size(), 0);
    for (auto p : pixel_of_unknown_) m[p] = 1;
    return m;
}

std::vector<std::size_t> boundary_pixels(const std::vector<std::uint8_t>& mask, int width, int height) {
    std::vector<std::size_t> out;
    auto inside = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < width && y < height && mask[static_cast<std::size_t>(y) * width + x];
    };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (inside(x, y) && !(inside(x - 1, y) && inside(x + 1, y) && inside(x, y - 1) && inside(x, y + 1)))
                out.push_back(static_cast<std::size_t>(y) * width + x);
    return out;
}

}  // namespace phpol
