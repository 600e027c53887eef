#include "phpol/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>

#include "phpol/types.hpp"

namespace phpol::eval {

const char* to_string(Method m) {
    switch (m) {
        case Method::Srt16: return "srt16";
        case Method::Prop1: return "prop1";
        case Method::Prop2: return "prop2";
        case Method::Prop3: return "prop3";
        case Method::Prop13: return "prop1+3";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "srt16") return Method::Srt16;
    if (name == "prop1") return Method::Prop1;
    if (name == "prop2") return Method::Prop2;
    if (name == "prop3") return Method::Prop3;
    if (name == "prop13" || name == "prop1+3") return Method::Prop13;
    throw ValidationError("bad_variant", "unknown method '" + name + "'");
}

synth::SceneConfig protocol_scene(const Protocol& proto, AlbedoSetting albedo, double sigma, std::uint64_t seed) {
    synth::SurfaceParams surf;
    surf.kind = synth::SurfaceKind::GaussianPeak;
    surf.amplitude = proto.amplitude;
    surf.width = proto.width;
    synth::AlbedoParams alb;
    alb.kind = albedo == AlbedoSetting::Uniform ? synth::AlbedoKind::Uniform : synth::AlbedoKind::Checkerboard;
    alb.levels = {proto.albedo_high};
    alb.low_levels = {proto.albedo_low};
    alb.square = proto.checker;

    synth::SceneConfig cfg;
    cfg.height = synth::make_surface(surf, proto.size, proto.size);
    synth::apply_disc_mask(cfg.height, proto.mask_radius);
    cfg.albedo = synth::make_albedo(alb, proto.size, proto.size, proto.colours);
    cfg.lights = {UnitVector3::normalised(proto.s), UnitVector3::normalised(proto.t)};
    cfg.eta = RefractiveIndex(proto.eta);
    cfg.polariser_angles = synth::angle_schedule_deg(0.0, proto.angle_step_deg, proto.angle_count);
    cfg.noise_sigma = sigma;
    cfg.bit_depth = proto.bit_depth;
    cfg.seed = seed;
    return cfg;
}

PreparedScene prepare(const synth::SceneConfig& scene, const poldecomp::FitOptions& fit) {
    PreparedScene out;
    out.capture = synth::render_stack(scene);
    out.pol = poldecomp::fit_multichannel(out.capture.stack, fit, &out.fit);
    return out;
}

LightingResult estimate_lighting(const PolarisationImage& pol, const RefractiveIndex& eta,
                                 const lightest::EstimateOptions& opts) {
    const auto grads = lightest::ambiguous_gradients(pol, eta);
    LightingResult out;
    out.estimate = lightest::estimate_lights(pol, grads, opts);
    const lightest::LightPair first{out.estimate->s_vec(), out.estimate->t_vec()};
    const lightest::LightPair second{lightest::flip(first.s), lightest::flip(first.t)};
    const GradientOperator op = build_gradient_operator(pol.rho);
    auto solve = [&](const lightest::LightPair& pair) {
        const constraints::Lighting l{pair.s, pair.t, kViewer};
        const auto field = constraints::assemble(MethodVariant::Prop1, pol, l, {}, nullptr, eta);
        return solver::solve_height(field, op).z;
    };
    out.resolution = lightest::resolve_ambiguity(first, second, solve);
    out.lighting = {out.resolution->lights.s, out.resolution->lights.t, kViewer};
    return out;
}

MethodRun run_method(Method method, const PolarisationImage& pol, const constraints::Lighting& lighting,
                     std::span<const Grid> albedo, const RefractiveIndex& eta, const SpecularMask* specular,
                     const MethodOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    MethodRun run{method, {}, std::nullopt, 0.0};
    if (method == Method::Prop13) {
        solver::Prop13Options p13 = opts.prop13;
        p13.assembly = opts.assembly;
        p13.solver = opts.solver;
        run.prop13 = solver::solve_prop13(pol, lighting, eta, specular, p13);
        run.height = run.prop13->height;
    } else {
        const MethodVariant v = method == Method::Srt16   ? MethodVariant::Srt16
                                : method == Method::Prop1 ? MethodVariant::Prop1
                                : method == Method::Prop2 ? MethodVariant::Prop2
                                                          : MethodVariant::Prop3;
        const auto field = constraints::assemble(v, pol, lighting, albedo, specular, eta, opts.assembly);
        run.height = solver::solve_height(field, build_gradient_operator(pol.rho), opts.solver);
    }
    run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

ChannelGrids assumed_albedo(const ChannelGrids& truth, AlbedoSetting setting) {
    if (setting == AlbedoSetting::Uniform) return truth;
    ChannelGrids out;
    for (const auto& g : truth) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t p = 0; p < g.size(); ++p)
            if (g.valid(p)) {
                sum += g[p];
                ++n;
            }
        Grid u(g.width(), g.height(), n ? sum / static_cast<double>(n) : 0.0);
        u.copy_mask_from(g);
        out.push_back(std::move(u));
    }
    return out;
}

std::string setting_name(AlbedoSetting albedo, LightingMode lighting) {
    std::string s = albedo == AlbedoSetting::Uniform ? "uniform_albedo" : "unknown_albedo";
    return s + (lighting == LightingMode::Known ? "_known_lighting" : "_estimated_lighting");
}

std::uint64_t cell_seed(std::uint64_t master, AlbedoSetting albedo, std::size_t sigma_index) {
    // splitmix64 finaliser over the cell coordinates.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (1 + sigma_index + 16 * (albedo == AlbedoSetting::Checkerboard));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Metrics score_against_truth(const solver::HeightSolution& h, const synth::CapturedStack& truth) {
    Grid gt = truth.height;
    PixelGrid<Vec3> n = truth.normals;
    gt.copy_mask_from(h.z);
    n.copy_mask_from(h.z);
    return compute_metrics(h.z, gt, n, build_gradient_operator(h.z));
}

std::vector<Table2Row> run_table2(const Table2Options& opts) {
    const Protocol& proto = opts.protocol;
    const RefractiveIndex eta(proto.eta);
    std::vector<Table2Row> rows;
    for (AlbedoSetting albedo : {AlbedoSetting::Uniform, AlbedoSetting::Checkerboard}) {
        std::vector<std::vector<Table2Row>> by_mode(2);
        for (std::size_t k = 0; k < proto.sigmas.size(); ++k) {
            const double sigma = proto.sigmas[k];
            const std::uint64_t seed = cell_seed(opts.seed, albedo, k);
            const PreparedScene scene = prepare(protocol_scene(proto, albedo, sigma, seed));
            const ChannelGrids told = assumed_albedo(scene.capture.albedo, albedo);
            for (LightingMode mode : {LightingMode::Known, LightingMode::Estimated}) {
                constraints::Lighting lighting{scene.capture.lights[0], scene.capture.lights[1], kViewer};
                std::string light_error;
                if (mode == LightingMode::Estimated) {
                    lightest::EstimateOptions eo;
                    eo.seed = seed;
                    try {
                        lighting = estimate_lighting(scene.pol, eta, eo).lighting;
                    } catch (const std::exception& e) {
                        light_error = e.what();
                    }
                }
                const std::string setting = setting_name(albedo, mode);
                for (Method m : kAllMethods) {
                    Table2Row row{setting, to_string(m), sigma, 0.0, 0.0, 0.0, light_error};
                    if (light_error.empty()) {
                        try {
                            const MethodRun run = run_method(m, scene.pol, lighting, told, eta);
                            const Metrics met = score_against_truth(run.height, scene.capture);
                            row.height_rms = met.height_rms;
                            row.normal_mae = met.normal_mae;
                            row.wall_ms = opts.timing ? run.wall_ms : 0.0;
                            if (opts.stats_sink) opts.stats_sink(solver::stats_json(row.method, run.height.stats));
                        } catch (const std::exception& e) {
                            row.error = e.what();
                        }
                    }
                    if (!row.error.empty()) row.height_rms = row.normal_mae = std::numeric_limits<double>::quiet_NaN();
                    by_mode[mode == LightingMode::Known ? 0 : 1].push_back(row);
                }
            }
        }
        // Table layout: settings are blocks, each listing methods by increasing sigma.
        for (auto& block : by_mode) {
            std::stable_sort(block.begin(), block.end(), [](const Table2Row& a, const Table2Row& b) {
                return static_cast<int>(parse_method(a.method)) < static_cast<int>(parse_method(b.method));
            });
            rows.insert(rows.end(), block.begin(), block.end());
        }
    }
    return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const Table2Row> rows) {
    out << "setting,method,sigma,height_rms,normal_mae,wall_ms\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.4g,%.6f,%.6f,%.3f\n", r.setting.c_str(), r.method.c_str(), r.sigma,
                      r.height_rms, r.normal_mae, r.wall_ms);
        out << buf;
    }
}

}  // namespace phpol::eval
