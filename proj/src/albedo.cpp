#include "phpol/albedo.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <queue>

#include "phpol/optics.hpp"

namespace phpol::albedo {

PixelGrid<Vec3> normals_from_height(const Grid& z, const GradientOperator& op) {
    const GradientGrid g = op.apply(z);
    PixelGrid<Vec3> n(z.width(), z.height());
    n.copy_mask_from(g);
    for (std::size_t p = 0; p < n.size(); ++p)
        if (n.valid(p)) n[p] = optics::normal_from_gradient(g[p]).vec();
    return n;
}

AlbedoMap albedo_pointwise(const PixelGrid<Vec3>& normals, std::span<const Grid> i1, std::span<const Grid> i2,
                           const UnitVector3& s, const std::optional<UnitVector3>& t, const SpecularMask* specular,
                           double eps) {
    if (i1.empty()) throw ValidationError("missing_input", "albedo needs at least one intensity channel");
    if (!i2.empty() && (i2.size() != i1.size() || !t))
        throw ValidationError("missing_input", "second-light intensities need a matching channel count and light t");
    for (const auto& g : i1)
        if (!g.same_shape(normals)) throw ValidationError("shape_mismatch", "intensity and normals differ in shape");

    AlbedoMap out;
    const int w = normals.width(), h = normals.height();
    out.undefined = PixelGrid<std::uint8_t>(w, h, 0);
    out.undefined.copy_mask_from(normals);
    for (std::size_t c = 0; c < i1.size(); ++c) {
        Grid a(w, h, 0.0);
        a.copy_mask_from(normals);
        out.albedo.push_back(std::move(a));
    }
    for (std::size_t p = 0; p < normals.size(); ++p) {
        if (!normals.valid(p)) continue;
        const bool spec = specular && (*specular)[p] != 0;
        const double ns = s.dot(normals[p]);
        const double nt = t ? t->dot(normals[p]) : 0.0;
        const bool use_s = !spec && ns > eps;
        const bool use_t = !spec && !i2.empty() && nt > eps;
        if (!use_s && !use_t) {
            out.undefined[p] = 1;
            ++out.undefined_count;
            continue;
        }
        const double den = (use_s ? ns * ns : 0.0) + (use_t ? nt * nt : 0.0);
        for (std::size_t c = 0; c < i1.size(); ++c) {
            const double num = (use_s ? i1[c][p] * ns : 0.0) + (use_t ? i2[c][p] * nt : 0.0);
            out.albedo[c][p] = std::max(0.0, num / den);
        }
    }
    return out;
}

AlbedoMap albedo_with_consistency(const AlbedoMap& pointwise, std::span<const Grid> i_ref,
                                  const PixelGrid<Vec3>& normals, const UnitVector3& s, const SpecularMask* specular,
                                  double lambda, double eps) {
    if (!(lambda >= 0.0)) throw ValidationError("bad_lambda", "consistency weight must be non-negative");
    if (i_ref.size() != pointwise.albedo.size())
        throw ValidationError("missing_input", "one reference intensity per albedo channel is required");
    if (lambda == 0.0) return pointwise;

    const int w = normals.width();
    std::vector<int> unknown(normals.size(), -1);
    std::vector<std::size_t> pixel;
    for (std::size_t p = 0; p < normals.size(); ++p) {
        if (!normals.valid(p)) continue;
        unknown[p] = static_cast<int>(pixel.size());
        pixel.push_back(p);
    }
    const auto m = static_cast<Eigen::Index>(pixel.size());
    auto is_data = [&](std::size_t p) {
        return !pointwise.undefined[p] && !(specular && (*specular)[p] != 0);
    };

    // Every connected piece of the domain needs at least one data pixel.
    {
        std::vector<std::uint8_t> seen(normals.size(), 0);
        for (auto start : pixel) {
            if (seen[start]) continue;
            bool has_data = false;
            std::queue<std::size_t> todo;
            todo.push(start);
            seen[start] = 1;
            while (!todo.empty()) {
                const auto p = todo.front();
                todo.pop();
                has_data = has_data || is_data(p);
                const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
                const int nx[4] = {x - 1, x + 1, x, x}, ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (!normals.valid(nx[k], ny[k])) continue;
                    const auto q = normals.index(nx[k], ny[k]);
                    if (!seen[q]) {
                        seen[q] = 1;
                        todo.push(q);
                    }
                }
            }
            if (!has_data) throw NumericalError("singular_albedo_system", "a domain component has no diffuse albedo data");
        }
    }

    struct Edge {
        std::size_t p, q;
    };
    std::vector<Edge> edges;
    std::vector<Eigen::Triplet<double>> trip;
    for (auto p : pixel) {
        const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
        const int u = unknown[p];
        if (is_data(p)) trip.emplace_back(u, u, 1.0);
        for (auto [nx, ny] : {std::pair{x + 1, y}, std::pair{x, y + 1}}) {
            if (!normals.valid(nx, ny)) continue;
            const auto q = normals.index(nx, ny);
            const int v = unknown[q];
            edges.push_back({p, q});
            trip.emplace_back(u, u, lambda);
            trip.emplace_back(v, v, lambda);
            trip.emplace_back(u, v, -lambda);
            trip.emplace_back(v, u, -lambda);
        }
    }
    Eigen::SparseMatrix<double> system(m, m);
    system.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(system);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("singular_albedo_system", "albedo consistency system could not be factorised");

    AlbedoMap out = pointwise;
    for (std::size_t c = 0; c < pointwise.albedo.size(); ++c) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (auto p : pixel)
            if (is_data(p)) rhs[unknown[p]] += pointwise.albedo[c][p];
        for (const auto& e : edges) {
            double g = 0.0;
            const double sp = s.dot(normals[e.p]), sq = s.dot(normals[e.q]);
            if (is_data(e.p) && is_data(e.q) && sp > eps && sq > eps) g = i_ref[c][e.q] / sq - i_ref[c][e.p] / sp;
            rhs[unknown[e.q]] += lambda * g;
            rhs[unknown[e.p]] -= lambda * g;
        }
        const Eigen::VectorXd sol = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("singular_albedo_system", "albedo consistency solve failed");
        for (auto p : pixel) out.albedo[c][p] = std::max(0.0, sol[unknown[p]]);
    }
    return out;
}

}  // namespace phpol::albedo
