// phpol: command-line front end for the reconstruction pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phpol/albedo.hpp"
#include "phpol/constraints.hpp"
#include "phpol/io.hpp"
#include "phpol/lightest.hpp"
#include "phpol/metrics.hpp"
#include "phpol/optics.hpp"
#include "phpol/pipeline.hpp"
#include "phpol/poldecomp.hpp"
#include "phpol/simd/kernels.hpp"
#include "phpol/solver.hpp"
#include "phpol/synth.hpp"
#include "workspace.hpp"

namespace {

using namespace phpol;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kDeg = 180.0 / M_PI;

void emit_error(const char* kind, const std::string& code, const std::string& message) {
    std::cerr << json{{"error", {{"kind", kind}, {"code", code}, {"message", message}}}}.dump() << std::endl;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("io_error", "cannot create directory " + dir.string() + ": " + ec.message());
}

void append_line(const fs::path& file, const std::string& line) {
    std::ofstream out(file, std::ios::app);
    if (!out) throw ValidationError("io_error", "cannot open " + file.string());
    out << line << '\n';
}

json light_json(const UnitVector3& v) {
    const auto sph = lightest::SphericalLight::from_vector(v);
    return {{"vector", {v.x(), v.y(), v.z()}}, {"theta_deg", sph.theta * kDeg}, {"alpha_deg", sph.alpha * kDeg}};
}

UnitVector3 parse_light(const std::string& text) {
    const auto v = cli::parse_vector(text, 3);
    const auto u = UnitVector3::normalised(v[0], v[1], v[2]);
    if (!(u.z() > 0.0)) throw ValidationError("bad_light", "light '" + text + "' is not in the upper hemisphere");
    return u;
}

PolarisationImage load_or_fit(const fs::path& dir, const cli::CaptureMeta& meta) {
    if (cli::has_polarisation(dir)) return cli::read_polarisation(dir);
    return poldecomp::fit_multichannel(cli::read_stack(dir / "stack.phmap", meta));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string config, out;
    std::vector<std::string> sets;
    std::optional<double> noise;
    std::optional<std::uint64_t> seed;
    bool png_stack = false;
};

int run_synth(const SynthArgs& a) {
    io::KeyValueConfig kv = a.config.empty() ? io::KeyValueConfig{} : io::KeyValueConfig::load(a.config);
    for (const auto& s : a.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("bad_config", "--set expects key=value, got '" + s + "'");
        const auto parsed = io::KeyValueConfig::parse(s);
        for (const auto& [k, v] : parsed.entries()) kv.set(k, v);
    }
    if (a.noise) kv.set("noise_sigma", std::to_string(*a.noise));
    if (a.seed) kv.set("seed", std::to_string(*a.seed));

    const synth::SceneConfig scene = synth::scene_from_config(kv);
    const synth::CapturedStack cap = synth::render_stack(scene);
    const fs::path dir(a.out);
    ensure_dir(dir);
    cli::write_capture(dir, cap);
    {
        std::ofstream out(dir / "scene.cfg");
        if (!out) throw ValidationError("io_error", "cannot write scene.cfg");
        out << cli::describe_capture(scene, kv).to_string();
    }
    io::write_png8(dir / "preview.png", std::span<const Grid>(&cap.stack.images.front(), 1));
    io::write_png8(dir / "height.png", std::span<const Grid>(std::vector<Grid>{cli::normalised_for_preview(cap.height)}));
    if (a.png_stack) {
        char name[64];
        for (std::size_t k = 0; k < cap.stack.images.size(); ++k) {
            std::snprintf(name, sizeof name, "stack_%03zu.png", k);
            io::write_png8(dir / name, std::span<const Grid>(&cap.stack.images[k], 1));
        }
    }
    std::cout << json{{"out", dir.string()},
                      {"width", cap.height.width()},
                      {"height", cap.height.height()},
                      {"lights", cap.stack.lights},
                      {"colours", cap.stack.colours},
                      {"angles", cap.stack.angle_count()},
                      {"domain_pixels", cap.height.valid_count()}}
                     .dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
    std::string in, out;
    int max_iterations = 200;
    double min_intensity = 1e-4;
};

int run_decompose(const DecomposeArgs& a) {
    const fs::path in(a.in), out(a.out.empty() ? a.in : a.out);
    const auto meta = cli::read_capture_meta(in / "scene.cfg");
    const auto stack = cli::read_stack(in / "stack.phmap", meta);
    poldecomp::FitOptions opts;
    opts.max_iterations = a.max_iterations;
    opts.min_intensity = a.min_intensity;
    poldecomp::FitReport report;
    const auto pol = poldecomp::fit_multichannel(stack, opts, &report);
    ensure_dir(out);
    cli::write_polarisation(out, pol);
    io::write_png8(out / "rho.png", std::span<const Grid>(&pol.rho, 1), 1.0 / optics::rho_max(RefractiveIndex(meta.eta)));
    io::write_png8(out / "phi.png", std::span<const Grid>(&pol.phi, 1), 1.0 / M_PI);
    std::cout << json{{"domain_pixels", pol.rho.valid_count()},
                      {"channels", pol.i_un.size()},
                      {"noise_sigma", pol.noise_sigma},
                      {"masked_pixels", report.masked_pixels},
                      {"degenerate_pixels", report.degenerate_pixels},
                      {"clamped_pixels", report.clamped_pixels},
                      {"nonconverged_pixels", report.nonconverged_pixels},
                      {"monotonicity_violations", report.monotonicity_violations},
                      {"max_iterations_used", report.max_iterations_used}}
                     .dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- estimate-light

struct LightArgs {
    std::string in, out;
    std::optional<double> eta;
    std::uint64_t seed = 1;
    int restarts = 16;
    std::size_t subsample = 5000;
    double min_significance = lightest::kDefaultMinSignificance;
};

json estimate_json(const eval::LightingResult& r) {
    json restarts = json::array();
    for (const auto& rec : r.estimate->restarts)
        restarts.push_back({{"objective", rec.objective}, {"iterations", rec.iterations}, {"converged", rec.converged}});
    json j{{"s", light_json(r.lighting.s)},
           {"t", light_json(*r.lighting.t)},
           {"objective", r.estimate->objective},
           {"converged", r.estimate->converged},
           {"samples", r.estimate->samples},
           {"restarts", restarts}};
    if (r.resolution) {
        j["resolution"] = {{"chosen", r.resolution->chosen},
                           {"convexity", {r.resolution->scores[0], r.resolution->scores[1]}},
                           {"warning", r.resolution->warning}};
    }
    return j;
}

eval::LightingResult estimate(const PolarisationImage& pol, double eta, std::uint64_t seed, int restarts,
                              std::size_t subsample, double min_significance) {
    lightest::EstimateOptions eo;
    eo.seed = seed;
    eo.restarts = restarts;
    eo.subsample = subsample;
    if (restarts < 1) throw ValidationError("bad_option", "restarts must be positive");
    if (min_significance == lightest::kDefaultMinSignificance) return eval::estimate_lighting(pol, RefractiveIndex(eta), eo);
    // Custom significance: same steps as estimate_lighting with a different pixel filter.
    const RefractiveIndex n(eta);
    const auto grads = lightest::ambiguous_gradients(pol, n, min_significance);
    eval::LightingResult out;
    out.estimate = lightest::estimate_lights(pol, grads, eo);
    const lightest::LightPair first{out.estimate->s_vec(), out.estimate->t_vec()};
    const lightest::LightPair second{lightest::flip(first.s), lightest::flip(first.t)};
    const GradientOperator op = build_gradient_operator(pol.rho);
    out.resolution = lightest::resolve_ambiguity(first, second, [&](const lightest::LightPair& p) {
        const constraints::Lighting l{p.s, p.t, kViewer};
        return solver::solve_height(constraints::assemble(MethodVariant::Prop1, pol, l, {}, nullptr, n), op).z;
    });
    out.lighting = {out.resolution->lights.s, out.resolution->lights.t, kViewer};
    return out;
}

int run_estimate_light(const LightArgs& a) {
    const fs::path in(a.in), out(a.out.empty() ? a.in : a.out);
    const auto meta = cli::read_capture_meta(in / "scene.cfg");
    const auto pol = load_or_fit(in, meta);
    const double eta = a.eta.value_or(meta.eta);
    const auto r = estimate(pol, eta, a.seed, a.restarts, a.subsample, a.min_significance);
    const json j = estimate_json(r);
    for (const char* name : {"s", "t"}) {
        const auto& l = j[name];
        std::printf("%s = (%.6f, %.6f, %.6f)  theta = %.3f deg  alpha = %.3f deg\n", name, l["vector"][0].get<double>(),
                    l["vector"][1].get<double>(), l["vector"][2].get<double>(), l["theta_deg"].get<double>(),
                    l["alpha_deg"].get<double>());
    }
    std::cout << j.dump() << '\n';
    ensure_dir(out);
    std::ofstream lf(out / "lights.cfg");
    if (!lf) throw ValidationError("io_error", "cannot write lights.cfg");
    char buf[256];
    const auto s = r.lighting.s, t = *r.lighting.t;
    std::snprintf(buf, sizeof buf, "lights = %.17g, %.17g, %.17g, %.17g, %.17g, %.17g\n", s.x(), s.y(), s.z(), t.x(),
                  t.y(), t.z());
    lf << buf;
    std::ofstream(out / "lights.json") << j.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string in, out, variant = "prop3", lights = "known", albedo = "known", stats, metrics, setting = "cli";
    std::optional<double> eta;
    std::optional<std::string> s, t;
    double lambda = albedo::kDefaultLambda;
    double specular_fraction = 0.0;
    std::uint64_t seed = 1;
    int max_rounds = 10;
};

constraints::Lighting resolve_lighting(const std::string& mode, const cli::CaptureMeta& meta,
                                       const PolarisationImage& pol, double eta, std::uint64_t seed) {
    std::vector<UnitVector3> ls;
    if (mode == "known") {
        ls = meta.lights;
    } else if (mode == "estimated") {
        const auto r = estimate(pol, eta, seed, 16, 5000, lightest::kDefaultMinSignificance);
        return r.lighting;
    } else {
        const auto kv = io::KeyValueConfig::load(mode);
        const auto v = kv.get_list("lights", {});
        if (v.empty() || v.size() % 3 != 0) throw ValidationError("bad_config", mode + ": lights must be x,y,z triples");
        for (std::size_t i = 0; i < v.size(); i += 3) ls.push_back(UnitVector3::normalised(v[i], v[i + 1], v[i + 2]));
    }
    constraints::Lighting l{ls.at(0), std::nullopt, kViewer};
    if (ls.size() > 1) l.t = ls[1];
    return l;
}

ChannelGrids resolve_albedo(const std::string& mode, const fs::path& in) {
    if (mode == "known" || mode == "mean") {
        if (!fs::exists(in / "albedo.phmap")) return {};
        const auto truth = io::read_float_map(in / "albedo.phmap");
        return eval::assumed_albedo(truth, mode == "known" ? eval::AlbedoSetting::Uniform
                                                           : eval::AlbedoSetting::Checkerboard);
    }
    char* end = nullptr;
    const double v = std::strtod(mode.c_str(), &end);
    if (end && *end == '\0' && end != mode.c_str()) {
        if (!(v > 0.0)) throw ValidationError("bad_albedo", "a constant albedo must be positive");
        ChannelGrids g;
        g.push_back(Grid(1, 1, v));  // broadcast below
        return g;
    }
    return io::read_float_map(mode);
}

int run_reconstruct(const ReconstructArgs& a) {
    const fs::path in(a.in), out(a.out.empty() ? a.in : a.out);
    const auto meta = cli::read_capture_meta(in / "scene.cfg");
    const eval::Method method = eval::parse_method(a.variant);
    const double eta = a.eta.value_or(meta.eta);
    const RefractiveIndex n(eta);
    const auto pol = load_or_fit(in, meta);

    constraints::Lighting lighting = resolve_lighting(a.lights, meta, pol, eta, a.seed);
    if (a.s) lighting.s = parse_light(*a.s);
    if (a.t) lighting.t = parse_light(*a.t);

    ChannelGrids albedo = resolve_albedo(a.albedo, in);
    if (albedo.size() == 1 && albedo[0].width() == 1 && albedo[0].height() == 1 && pol.rho.size() > 1) {
        Grid g(pol.rho.width(), pol.rho.height(), albedo[0][0]);
        albedo = {g};
    }

    std::optional<SpecularMask> spec;
    if (a.specular_fraction > 0.0) spec = constraints::specular_mask_from_percentile(pol, a.specular_fraction);

    eval::MethodOptions mo;
    mo.prop13.lambda = a.lambda;
    mo.prop13.max_iterations = a.max_rounds;
    const auto run = eval::run_method(method, pol, lighting, albedo, n, spec ? &*spec : nullptr, mo);

    ensure_dir(out);
    io::write_float_map(out / "height_est.phmap", run.height.z);
    io::write_png8(out / "height_est.png", std::vector<Grid>{cli::normalised_for_preview(run.height.z)});
    if (run.prop13) io::write_float_map(out / "albedo_est.phmap", run.prop13->albedo.albedo);

    const std::string stats_line = solver::stats_json(eval::to_string(method), run.height.stats);
    if (!a.stats.empty()) append_line(a.stats, stats_line);
    else std::cerr << stats_line << '\n';

    if (fs::exists(in / "height.phmap") && fs::exists(in / "normals.phmap")) {
        Grid gt = io::read_single_channel(in / "height.phmap");
        auto normals = cli::read_normals(in / "normals.phmap");
        gt.copy_mask_from(run.height.z);
        normals.copy_mask_from(run.height.z);
        const auto m = eval::compute_metrics(run.height.z, gt, normals, build_gradient_operator(run.height.z));
        const eval::Table2Row row{a.setting, eval::to_string(method), meta.noise_sigma, m.height_rms, m.normal_mae,
                                  run.wall_ms, ""};
        std::ostringstream csv;
        eval::write_metrics_csv(csv, std::span<const eval::Table2Row>(&row, 1));
        std::cout << csv.str();
        if (!a.metrics.empty()) {
            const bool fresh = !fs::exists(a.metrics);
            std::ofstream mf(a.metrics, std::ios::app);
            if (!mf) throw ValidationError("io_error", "cannot open " + a.metrics);
            const std::string text = csv.str();
            mf << (fresh ? text : text.substr(text.find('\n') + 1));
        }
    }
    return 0;
}

// ---------------------------------------------------------------- albedo

struct AlbedoArgs {
    std::string in, out, height, lights = "known";
    double lambda = albedo::kDefaultLambda;
    double specular_fraction = 0.0;
    std::uint64_t seed = 1;
};

int run_albedo(const AlbedoArgs& a) {
    const fs::path in(a.in), out(a.out.empty() ? a.in : a.out);
    const auto meta = cli::read_capture_meta(in / "scene.cfg");
    const auto pol = load_or_fit(in, meta);
    const Grid z = io::read_single_channel(a.height.empty() ? in / "height_est.phmap" : fs::path(a.height));
    if (!z.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "height and polarisation maps differ in shape");
    const auto lighting = resolve_lighting(a.lights, meta, pol, meta.eta, a.seed);
    std::optional<SpecularMask> spec;
    if (a.specular_fraction > 0.0) spec = constraints::specular_mask_from_percentile(pol, a.specular_fraction);

    const auto normals = albedo::normals_from_height(z, build_gradient_operator(z));
    const auto i2 = pol.lights > 1 ? pol.iun_of_light(1) : std::span<const Grid>{};
    const std::optional<UnitVector3> t = pol.lights > 1 ? lighting.t : std::nullopt;
    const auto point = albedo::albedo_pointwise(normals, pol.iun_of_light(0), i2, lighting.s, t, spec ? &*spec : nullptr);
    const auto map = albedo::albedo_with_consistency(point, pol.iun_of_light(0), normals, lighting.s,
                                                     spec ? &*spec : nullptr, a.lambda);
    ensure_dir(out);
    io::write_float_map(out / "albedo_est.phmap", map.albedo);
    const std::span<const Grid> preview(map.albedo.data(), map.albedo.size() == 3 ? 3 : 1);
    io::write_png8(out / "albedo_est.png", preview);
    std::cout << json{{"channels", map.albedo.size()}, {"undefined_pixels", map.undefined_count}, {"lambda", a.lambda}}.dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string height, gt, gt_normals, csv, setting = "cli", method = "unknown";
    double sigma = 0.0;
};

int run_eval(const EvalArgs& a) {
    const Grid z = io::read_single_channel(a.height);
    Grid gt = io::read_single_channel(a.gt);
    if (!gt.same_shape(z)) throw ValidationError("mask_mismatch", "estimated and ground-truth heights differ in shape");
    const GradientOperator op = build_gradient_operator(z);
    PixelGrid<Vec3> normals;
    if (!a.gt_normals.empty()) {
        normals = cli::read_normals(a.gt_normals);
    } else {
        // Normals of the reference height, differentiated with the same stencil.
        Grid ref = gt;
        ref.copy_mask_from(z);
        normals = albedo::normals_from_height(ref, op);
    }
    for (std::size_t p = 0; p < z.size(); ++p)
        if (z.valid(p) && (!gt.valid(p) || !normals.valid(p)))
            throw ValidationError("mask_mismatch", "estimate covers pixels without ground truth");
    gt.copy_mask_from(z);
    normals.copy_mask_from(z);
    const auto m = eval::compute_metrics(z, gt, normals, op);
    const eval::Table2Row row{a.setting, a.method, a.sigma, m.height_rms, m.normal_mae, 0.0, ""};
    std::ostringstream csv;
    eval::write_metrics_csv(csv, std::span<const eval::Table2Row>(&row, 1));
    if (a.csv.empty()) {
        std::cout << csv.str();
    } else {
        const bool fresh = !fs::exists(a.csv);
        std::ofstream f(a.csv, std::ios::app);
        if (!f) throw ValidationError("io_error", "cannot open " + a.csv);
        const std::string text = csv.str();
        f << (fresh ? text : text.substr(text.find('\n') + 1));
    }
    return 0;
}

// ---------------------------------------------------------------- table2

struct Table2Args {
    std::uint64_t seed = 7;
    std::string out, stats, config;
    bool timing = false;
};

int run_table2_cmd(const Table2Args& a) {
    eval::Table2Options opts;
    opts.seed = a.seed;
    opts.timing = a.timing;
    if (!a.config.empty()) {
        const auto kv = io::KeyValueConfig::load(a.config);
        auto& p = opts.protocol;
        p.size = kv.get_int("size", p.size);
        p.amplitude = kv.get_double("amplitude", p.amplitude);
        p.width = kv.get_double("sigma_width", p.width);
        p.eta = kv.get_double("eta", p.eta);
        p.bit_depth = kv.get_int("bit_depth", p.bit_depth);
        p.colours = kv.get_int("colours", p.colours);
        p.mask_radius = kv.get_double("mask_radius", p.mask_radius);
        p.sigmas = kv.get_list("sigmas", p.sigmas);
        if (kv.has("lights")) {
            const auto v = kv.get_list("lights", {});
            if (v.size() != 6) throw ValidationError("bad_config", "table2 lights must be two x,y,z triples");
            p.s = Vec3{v[0], v[1], v[2]};
            p.t = Vec3{v[3], v[4], v[5]};
        }
        if (p.size < 8) throw ValidationError("bad_config", "size must be at least 8");
    }
    std::ofstream stats_file;
    if (!a.stats.empty()) {
        stats_file.open(a.stats, std::ios::trunc);
        if (!stats_file) throw ValidationError("io_error", "cannot open " + a.stats);
        opts.stats_sink = [&](const std::string& line) { stats_file << line << '\n'; };
    }
    const auto rows = eval::run_table2(opts);
    if (a.out.empty()) {
        eval::write_metrics_csv(std::cout, rows);
    } else {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw ValidationError("io_error", "cannot open " + a.out);
        eval::write_metrics_csv(f, rows);
    }
    for (const auto& r : rows)
        if (!r.error.empty()) {
            std::cerr << json{{"warning", {{"setting", r.setting}, {"method", r.method}, {"sigma", r.sigma}, {"message", r.error}}}}
                             .dump()
                      << '\n';
        }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Height from photo-polarimetric images"};
    app.require_subcommand(1);
    std::string isa = "auto";
    app.add_option("--isa", isa, "SIMD kernels: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Render a synthetic polariser stack with ground truth");
    synth->add_option("--config", sa.config, "key = value scene description")->check(CLI::ExistingFile);
    synth->add_option("--set", sa.sets, "override a config key (key=value)");
    synth->add_option("--noise", sa.noise, "noise standard deviation (fraction of full scale)");
    synth->add_option("--seed", sa.seed, "noise seed");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_flag("--png-stack", sa.png_stack, "also write every stack image as PNG");

    DecomposeArgs da;
    auto* decompose = app.add_subcommand("decompose", "Fit unpolarised intensity, degree and phase of polarisation");
    decompose->add_option("--in", da.in, "directory with scene.cfg and stack.phmap")->required();
    decompose->add_option("--out", da.out, "output directory (default: --in)");
    decompose->add_option("--max-iterations", da.max_iterations, "alternation cap per pixel");
    decompose->add_option("--min-intensity", da.min_intensity, "pixels darker than this leave the domain");

    LightArgs la;
    auto* light = app.add_subcommand("estimate-light", "Estimate two light directions from polarisation and shading");
    light->add_option("--in", la.in, "working directory")->required();
    light->add_option("--out", la.out, "output directory (default: --in)");
    light->add_option("--eta", la.eta, "refractive index (default: from scene.cfg)");
    light->add_option("--seed", la.seed, "subsampling and restart seed");
    light->add_option("--restarts", la.restarts, "random restarts");
    light->add_option("--subsample", la.subsample, "pixels in the search pass");
    light->add_option("--min-significance", la.min_significance, "skip pixels with rho below this many standard errors");

    ReconstructArgs ra;
    auto* rec = app.add_subcommand("reconstruct", "Solve for the height map");
    rec->add_option("--in", ra.in, "working directory")->required();
    rec->add_option("--out", ra.out, "output directory (default: --in)");
    rec->add_option("--variant", ra.variant, "srt16, prop1, prop2, prop3 or prop1+3");
    rec->add_option("--eta", ra.eta, "refractive index (default: from scene.cfg)");
    rec->add_option("--lights", ra.lights, "known, estimated, or a config file with 'lights ='");
    rec->add_option("--s", ra.s, "first light x,y,z (overrides --lights)");
    rec->add_option("--t", ra.t, "second light x,y,z (overrides --lights)");
    rec->add_option("--albedo", ra.albedo, "known, mean, a constant, or a float map");
    rec->add_option("--lambda", ra.lambda, "albedo gradient consistency weight (prop1+3)");
    rec->add_option("--rounds", ra.max_rounds, "albedo and height rounds (prop1+3)");
    rec->add_option("--specular-fraction", ra.specular_fraction, "treat the brightest fraction of pixels as specular");
    rec->add_option("--seed", ra.seed, "light estimation seed");
    rec->add_option("--stats", ra.stats, "append solver statistics as JSON lines");
    rec->add_option("--metrics", ra.metrics, "append the metrics row to this CSV");
    rec->add_option("--setting", ra.setting, "setting label in the metrics row");

    AlbedoArgs aa;
    auto* alb = app.add_subcommand("albedo", "Recover albedo from a height map and the intensities");
    alb->add_option("--in", aa.in, "working directory")->required();
    alb->add_option("--out", aa.out, "output directory (default: --in)");
    alb->add_option("--height", aa.height, "height map (default: height_est.phmap)");
    alb->add_option("--lights", aa.lights, "known, estimated, or a config file with 'lights ='");
    alb->add_option("--lambda", aa.lambda, "gradient consistency weight");
    alb->add_option("--specular-fraction", aa.specular_fraction, "treat the brightest fraction of pixels as specular");
    alb->add_option("--seed", aa.seed, "light estimation seed");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Score a height map against ground truth");
    ev->add_option("--height", ea.height, "estimated height")->required();
    ev->add_option("--gt", ea.gt, "ground-truth height")->required();
    ev->add_option("--gt-normals", ea.gt_normals, "ground-truth normals (default: from --gt)");
    ev->add_option("--csv", ea.csv, "append to this CSV instead of printing");
    ev->add_option("--setting", ea.setting, "setting label");
    ev->add_option("--method", ea.method, "method label");
    ev->add_option("--sigma", ea.sigma, "noise level label");

    Table2Args ta;
    auto* t2 = app.add_subcommand("table2", "Run the full synthetic evaluation grid");
    t2->add_option("--seed", ta.seed, "master seed");
    t2->add_option("--out", ta.out, "CSV path (default: stdout)");
    t2->add_option("--stats", ta.stats, "JSON-lines solver statistics");
    t2->add_option("--config", ta.config, "protocol overrides")->check(CLI::ExistingFile);
    t2->add_flag("--timing", ta.timing, "record wall-clock times (output is no longer reproducible)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        emit_error("validation", "usage", e.what());
        return 1;
    }

    try {
        simd::set_active_isa(simd::parse_isa(isa));
        if (*synth) return run_synth(sa);
        if (*decompose) return run_decompose(da);
        if (*light) return run_estimate_light(la);
        if (*rec) return run_reconstruct(ra);
        if (*alb) return run_albedo(aa);
        if (*ev) return run_eval(ea);
        if (*t2) return run_table2_cmd(ta);
    } catch (const ValidationError& e) {
        emit_error("validation", e.code(), e.what());
        return 1;
    } catch (const NumericalError& e) {
        emit_error("numerical", e.code(), e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        emit_error("validation", "invalid_argument", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("numerical", "internal", e.what());
        return 2;
    }
    return 1;
}
