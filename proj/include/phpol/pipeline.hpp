#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "phpol/constraints.hpp"
#include "phpol/lightest.hpp"
#include "phpol/metrics.hpp"
#include "phpol/poldecomp.hpp"
#include "phpol/solver.hpp"
#include "phpol/synth.hpp"

namespace phpol::eval {

enum class Method { Srt16, Prop1, Prop2, Prop3, Prop13 };
const char* to_string(Method m);
/// "srt16", "prop1", "prop2", "prop3", "prop13" (also "prop1+3").
Method parse_method(const std::string& name);
inline constexpr Method kAllMethods[] = {Method::Srt16, Method::Prop1, Method::Prop2, Method::Prop3, Method::Prop13};

enum class AlbedoSetting { Uniform, Checkerboard };
enum class LightingMode { Known, Estimated };

/// The synthetic evaluation protocol: gaussian peak, two lights, 18 polariser
/// angles in 10 degree steps, noise then saturation and 8-bit quantisation.
struct Protocol {
    int size = 128;
    double amplitude = 20.0;
    double width = 16.0;
    Vec3 s{1.0, 0.0, 5.0};
    Vec3 t{-1.0, -2.0, 7.0};
    double eta = 1.5;
    int angle_count = 18;
    double angle_step_deg = 10.0;
    int bit_depth = 8;
    int colours = 1;
    double albedo_high = 0.8;
    double albedo_low = 0.4;
    int checker = 16;
    /// Object silhouette: pixels farther than this from the peak centre are
    /// background and leave the domain (34 px is where the default peak falls to
    /// 1% of its amplitude). 0 keeps the whole raster.
    double mask_radius = 34.0;
    std::vector<double> sigmas{0.0, 0.005, 0.02};
};

synth::SceneConfig protocol_scene(const Protocol& proto, AlbedoSetting albedo, double sigma, std::uint64_t seed);

/// Everything a reconstruction consumes, with ground truth alongside.
struct PreparedScene {
    synth::CapturedStack capture;
    PolarisationImage pol;
    poldecomp::FitReport fit;
};

PreparedScene prepare(const synth::SceneConfig& scene, const poldecomp::FitOptions& fit = {});

struct LightingResult {
    constraints::Lighting lighting;
    std::optional<lightest::LightEstimate> estimate;
    std::optional<lightest::Resolution> resolution;
};

/// Estimates both lights and settles the convex/concave ambiguity with a
/// prop1 height solve for each candidate.
LightingResult estimate_lighting(const PolarisationImage& pol, const RefractiveIndex& eta,
                                 const lightest::EstimateOptions& opts = {});

struct MethodOptions {
    constraints::AssemblyOptions assembly;
    solver::SolverOptions solver;
    solver::Prop13Options prop13;
};

struct MethodRun {
    Method method;
    solver::HeightSolution height;
    std::optional<solver::Prop13Result> prop13;
    double wall_ms = 0.0;
};

/// One reconstruction. `albedo` is the albedo the method is told (ignored by
/// prop1 and prop1+3, which recover their own).
MethodRun run_method(Method method, const PolarisationImage& pol, const constraints::Lighting& lighting,
                     std::span<const Grid> albedo, const RefractiveIndex& eta, const SpecularMask* specular = nullptr,
                     const MethodOptions& opts = {});

/// Metrics of a reconstruction against the ground truth restricted to its domain.
Metrics score_against_truth(const solver::HeightSolution& h, const synth::CapturedStack& truth);

/// The albedo handed to methods that need one: the true map when it is known,
/// else a uniform map at the mean of the true albedo.
ChannelGrids assumed_albedo(const ChannelGrids& truth, AlbedoSetting setting);

struct Table2Row {
    std::string setting;
    std::string method;
    double sigma = 0.0;
    double height_rms = 0.0;
    double normal_mae = 0.0;
    double wall_ms = 0.0;
    std::string error;  // non-empty when the reconstruction failed
};

std::string setting_name(AlbedoSetting albedo, LightingMode lighting);

/// Seed for one (albedo, sigma) cell, shared by every method and lighting mode
/// so their comparison is paired.
std::uint64_t cell_seed(std::uint64_t master, AlbedoSetting albedo, std::size_t sigma_index);

struct Table2Options {
    Protocol protocol;
    std::uint64_t seed = 7;
    bool timing = false;  // record wall_ms; off keeps the CSV reproducible byte for byte
    std::function<void(const std::string&)> stats_sink;  // JSON-lines solver statistics
};

std::vector<Table2Row> run_table2(const Table2Options& opts);

/// Header "setting,method,sigma,height_rms,normal_mae,wall_ms" then one line per row.
void write_metrics_csv(std::ostream& out, std::span<const Table2Row> rows);

}  // namespace phpol::eval
