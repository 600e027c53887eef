#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phpol/albedo.hpp"
#include "phpol/constraints.hpp"
#include "phpol/gradient_operator.hpp"
#include "phpol/poldecomp.hpp"

namespace phpol::solver {

struct SolverOptions {
    /// Normal equations are factorised directly up to this many unknowns,
    /// solved by diagonally preconditioned conjugate gradients above it.
    std::size_t direct_max_unknowns = 256 * 256;
    double cg_tolerance = 1e-10;
    int cg_max_iterations_factor = 10;
};

struct SolverStats {
    std::string method;  // "ldlt" or "cg"
    std::size_t unknowns = 0;
    std::size_t rows = 0;
    long iterations = 0;
    double residual_norm = 0.0;           // ||A z - h||_2
    double normal_equation_residual = 0.0;  // ||A^T (A z - h)||_inf / ||A^T h||_inf
    double wall_ms = 0.0;
};

struct HeightSolution {
    Grid z;  // masked like the constraint domain; zero at the pinned pixel
    std::size_t pinned_pixel = 0;
    SolverStats stats;
};

/// Masked pixel closest to the centroid of the domain (lowest index on ties).
std::size_t choose_pinned_pixel(const GradientOperator& op);

/// Least-squares height for B grad z = h discretised as A z = h with
/// A = B G, one pixel removed from the unknowns and held at zero.
/// Throws NumericalError("singular_system") when A has rank below M - 1 and
/// NumericalError("no_convergence") when the iterative path stalls.
HeightSolution solve_height(const ConstraintField& field, const GradientOperator& op, const SolverOptions& opts = {});

/// Stats line: {"variant":..,"M":..,"iterations":..,"residual":..,"wall_ms":..}
std::string stats_json(const std::string& variant, const SolverStats& stats);

struct Prop13Options {
    int max_iterations = 10;
    double relative_change = 1e-5;
    double lambda = albedo::kDefaultLambda;
    constraints::AssemblyOptions assembly;
    SolverOptions solver;
};

struct Prop13Result {
    HeightSolution height;
    albedo::AlbedoMap albedo;
    int iterations = 0;  // albedo + prop3 rounds performed
    bool converged = false;
    bool residual_rose = false;  // the next round raised the residual and was dropped
    std::vector<double> changes;    // relative height change per round
    std::vector<double> residuals;  // prop3 residual norm per round
};

/// Albedo-invariant solve, then alternate albedo recovery and the most
/// constrained solve until the height settles. Rounds are accepted only while
/// the residual of the constrained solve does not increase.
Prop13Result solve_prop13(const PolarisationImage& pol, const constraints::Lighting& lighting,
                          const RefractiveIndex& eta, const SpecularMask* specular, const Prop13Options& opts = {});

}  // namespace phpol::solver
