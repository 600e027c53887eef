#include "phpol/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace phpol::solver {

std::size_t choose_pinned_pixel(const GradientOperator& op) {
    const int w = op.width();
    double cx = 0.0, cy = 0.0;
    for (auto p : op.pixels()) {
        cx += static_cast<double>(p % w);
        cy += static_cast<double>(p / w);
    }
    const auto m = static_cast<double>(op.unknowns());
    cx /= m;
    cy /= m;
    std::size_t best = op.pixels().front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto p : op.pixels()) {
        const double dx = static_cast<double>(p % w) - cx, dy = static_cast<double>(p / w) - cy;
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

namespace {

struct System {
    Eigen::SparseMatrix<double> a;  // rows x M, every unknown including the pinned one
    Eigen::VectorXd h;
};

System build_system(const ConstraintField& field, const GradientOperator& op) {
    using Row = GradientOperator::SparseRow;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> rhs;
    trip.reserve(field.row_count() * 4);
    rhs.reserve(field.row_count());
    Eigen::Index row = 0;
    for (std::size_t u = 0; u < op.unknowns(); ++u) {
        const std::size_t p = op.pixel_of_unknown(u);
        const auto iu = static_cast<Eigen::Index>(u);
        for (const auto& r : field.rows_at(p)) {
            const double wx = r.weight * r.bx, wy = r.weight * r.by;
            for (Row::InnerIterator it(op.dx(), iu); it; ++it) trip.emplace_back(row, it.col(), wx * it.value());
            for (Row::InnerIterator it(op.dy(), iu); it; ++it) trip.emplace_back(row, it.col(), wy * it.value());
            rhs.push_back(r.weight * r.h);
            ++row;
        }
    }
    System s;
    s.a.resize(row, static_cast<Eigen::Index>(op.unknowns()));
    s.a.setFromTriplets(trip.begin(), trip.end());  // duplicates (shared centre pixel) are summed
    s.h = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    return s;
}

/// Drops column `pinned` from A.
Eigen::SparseMatrix<double> without_column(const Eigen::SparseMatrix<double>& a, Eigen::Index pinned) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        if (c == pinned) continue;
        const Eigen::Index nc = c < pinned ? c : c - 1;
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) trip.emplace_back(it.row(), nc, it.value());
    }
    Eigen::SparseMatrix<double> out(a.rows(), a.cols() - 1);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace

HeightSolution solve_height(const ConstraintField& field, const GradientOperator& op, const SolverOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    if (field.width() != op.width() || field.height() != op.height())
        throw ValidationError("shape_mismatch", "constraint field and gradient operator differ in shape");
    for (std::size_t p = 0; p < field.pixel_count(); ++p)
        if (!field.rows_at(p).empty() && op.unknown_of_pixel(p) < 0)
            throw ValidationError("shape_mismatch", "constraint rows outside the gradient operator's domain");

    const System sys = build_system(field, op);
    const std::size_t pinned_pixel = choose_pinned_pixel(op);
    const auto pinned = static_cast<Eigen::Index>(op.unknown_of_pixel(pinned_pixel));
    const Eigen::SparseMatrix<double> ar = without_column(sys.a, pinned);
    const Eigen::SparseMatrix<double> normal = (ar.transpose() * ar).pruned();
    const Eigen::VectorXd rhs = ar.transpose() * sys.h;
    const Eigen::Index n = normal.rows();

    HeightSolution out;
    out.pinned_pixel = pinned_pixel;
    out.stats.unknowns = op.unknowns();
    out.stats.rows = static_cast<std::size_t>(sys.a.rows());

    Eigen::VectorXd zr;
    if (op.unknowns() <= opts.direct_max_unknowns) {
        out.stats.method = "ldlt";
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("singular_system", "normal equations could not be factorised");
        const Eigen::VectorXd d = ldlt.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        if (!(d.minCoeff() > 1e-12 * dmax))
            throw NumericalError("singular_system", "normal equations are rank deficient (rank < M - 1)");
        zr = ldlt.solve(rhs);
        out.stats.iterations = 1;
    } else {
        out.stats.method = "cg";
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(opts.cg_tolerance);
        cg.setMaxIterations(static_cast<Eigen::Index>(opts.cg_max_iterations_factor) * n);
        cg.compute(normal);
        zr = cg.solve(rhs);
        out.stats.iterations = static_cast<long>(cg.iterations());
        if (cg.info() != Eigen::Success)
            throw NumericalError("no_convergence", "conjugate gradients did not reach the tolerance");
    }
    if (!zr.allFinite()) throw NumericalError("singular_system", "height solve produced non-finite values");

    Eigen::VectorXd z(static_cast<Eigen::Index>(op.unknowns()));
    for (Eigen::Index u = 0, k = 0; u < z.size(); ++u) z[u] = u == pinned ? 0.0 : zr[k++];

    const Eigen::VectorXd r = sys.a * z - sys.h;
    out.stats.residual_norm = r.norm();
    const double grad = (sys.a.transpose() * r).cwiseAbs().maxCoeff();
    const double scale = sys.h.size() ? (sys.a.transpose() * sys.h).cwiseAbs().maxCoeff() : 0.0;
    out.stats.normal_equation_residual = scale > 0.0 ? grad / scale : grad;

    out.z = Grid(op.width(), op.height(), 0.0);
    for (std::size_t p = 0; p < out.z.size(); ++p) out.z.set_valid(p, op.unknown_of_pixel(p) >= 0);
    for (std::size_t u = 0; u < op.unknowns(); ++u) out.z[op.pixel_of_unknown(u)] = z[static_cast<Eigen::Index>(u)];
    out.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string stats_json(const std::string& variant, const SolverStats& stats) {
    std::ostringstream out;
    out.precision(12);
    out << "{\"variant\":\"" << variant << "\",\"M\":" << stats.unknowns << ",\"rows\":" << stats.rows
        << ",\"method\":\"" << stats.method << "\",\"iterations\":" << stats.iterations
        << ",\"residual\":" << stats.residual_norm << ",\"normal_residual\":" << stats.normal_equation_residual
        << ",\"wall_ms\":" << stats.wall_ms << "}";
    return out.str();
}

namespace {

double relative_change(const Grid& a, const Grid& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        if (!a.valid(p)) continue;
        num += (a[p] - b[p]) * (a[p] - b[p]);
        den += a[p] * a[p];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

Prop13Result solve_prop13(const PolarisationImage& pol, const constraints::Lighting& lighting,
                          const RefractiveIndex& eta, const SpecularMask* specular, const Prop13Options& opts) {
    if (!lighting.t) throw ValidationError("missing_input", "prop1+3 needs two lights");
    const GradientOperator op = build_gradient_operator(pol.rho);
    Prop13Result res;
    const ConstraintField f1 =
        constraints::assemble(MethodVariant::Prop1, pol, lighting, {}, specular, eta, opts.assembly);
    res.height = solve_height(f1, op, opts.solver);

    for (int it = 1; it <= opts.max_iterations; ++it) {
        const PixelGrid<Vec3> normals = albedo::normals_from_height(res.height.z, op);
        const auto point = albedo::albedo_pointwise(normals, pol.iun_of_light(0), pol.iun_of_light(1), lighting.s,
                                                    lighting.t, specular);
        albedo::AlbedoMap alb = albedo::albedo_with_consistency(point, pol.iun_of_light(0), normals, lighting.s,
                                                                specular, opts.lambda);
        const ConstraintField f3 =
            constraints::assemble(MethodVariant::Prop3, pol, lighting, alb.albedo, specular, eta, opts.assembly);
        HeightSolution next = solve_height(f3, op, opts.solver);
        // The albedo step fits its own objective, not this one, so a round can
        // raise the residual. Such a round is dropped and the previous kept.
        if (!res.residuals.empty() && next.stats.residual_norm > res.residuals.back()) {
            res.residual_rose = true;
            break;
        }
        const double change = relative_change(next.z, res.height.z);
        res.changes.push_back(change);
        res.residuals.push_back(next.stats.residual_norm);
        res.height = std::move(next);
        res.albedo = std::move(alb);
        res.iterations = it;
        if (change < opts.relative_change) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace phpol::solver
