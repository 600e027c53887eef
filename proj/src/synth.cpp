#include "phpol/synth.hpp"

#include <algorithm>
#include <cmath>

#include "phpol/io.hpp"
#include "phpol/optics.hpp"
#include "phpol/simd/kernels.hpp"

namespace phpol {

PolariserStack PolariserStack::select_lights(const std::vector<int>& which) const {
    PolariserStack out;
    out.angles = angles;
    out.colours = colours;
    out.lights = static_cast<int>(which.size());
    for (int l : which) {
        if (l < 0 || l >= lights) throw ValidationError("bad_light_index", "light index out of range");
        for (int c = 0; c < colours; ++c)
            for (std::size_t j = 0; j < angles.size(); ++j) out.images.push_back(at(l * colours + c, j));
    }
    return out;
}

namespace synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t bits) {
    // (0, 1): never exactly zero, so the logarithm below stays finite.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double counter_gaussian(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(counter));
    const double u1 = to_unit_open(k);
    const double u2 = to_unit_open(splitmix64(k));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Grid make_surface(const SurfaceParams& params, int width, int height) {
    if (params.kind == SurfaceKind::FromFile) {
        Grid g = io::read_single_channel(params.file);
        if ((width > 0 && g.width() != width) || (height > 0 && g.height() != height))
            throw ValidationError("shape_mismatch", "surface file does not match the requested size");
        return g;
    }
    Grid z(width, height);
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (params.kind == SurfaceKind::Plane) {
                z(x, y) = params.plane_a * x + params.plane_b * y + params.plane_c;
            } else {
                if (!(params.width > 0.0)) throw ValidationError("bad_surface", "gaussian width must be positive");
                const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                z(x, y) = params.amplitude * std::exp(-r2 / (params.width * params.width));
            }
        }
    }
    return z;
}

GradientGrid analytic_gradient(const SurfaceParams& params, int width, int height) {
    if (params.kind == SurfaceKind::FromFile)
        throw ValidationError("no_analytic_gradient", "file surfaces have no analytic gradient");
    GradientGrid g(width, height);
    const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
    const double w2 = params.width * params.width;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (params.kind == SurfaceKind::Plane) {
                g(x, y) = {params.plane_a, params.plane_b};
            } else {
                const double dx = x - cx, dy = y - cy;
                const double z = params.amplitude * std::exp(-(dx * dx + dy * dy) / w2);
                g(x, y) = {-2.0 * dx / w2 * z, -2.0 * dy / w2 * z};
            }
        }
    }
    return g;
}

ChannelGrids make_albedo(const AlbedoParams& params, int width, int height, int colours) {
    if (colours < 1) throw ValidationError("bad_colours", "need at least one colour channel");
    auto level = [&](const std::vector<double>& v, int c) {
        if (v.empty()) throw ValidationError("bad_albedo", "albedo levels must not be empty");
        if (v.size() != 1 && v.size() != static_cast<std::size_t>(colours))
            throw ValidationError("bad_albedo", "albedo levels must have 1 or `colours` entries");
        const double a = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(c)];
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("bad_albedo", "albedo must lie in [0, 1]");
        return a;
    };
    if (params.kind == AlbedoKind::Checkerboard && params.square < 1)
        throw ValidationError("bad_albedo", "checker square must be at least one pixel");
    ChannelGrids out;
    for (int c = 0; c < colours; ++c) {
        const double hi = level(params.levels, c);
        Grid g(width, height, hi);
        if (params.kind == AlbedoKind::Checkerboard) {
            const double lo = level(params.low_levels, c);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    if (((x / params.square) + (y / params.square)) % 2 == 0) g(x, y) = lo;
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<double> angle_schedule_deg(double start_deg, double step_deg, int count) {
    std::vector<double> out;
    for (int j = 0; j < count; ++j) out.push_back((start_deg + step_deg * j) * M_PI / 180.0);
    return out;
}

CapturedStack render_stack(const SceneConfig& cfg) {
    if (cfg.height.empty()) throw ValidationError("bad_scene", "scene has no height map");
    if (cfg.polariser_angles.size() < 3) throw ValidationError("bad_scene", "need at least three polariser angles");
    if (!(cfg.noise_sigma >= 0.0)) throw ValidationError("bad_scene", "noise sigma must be non-negative");
    if (cfg.bit_depth < 0 || cfg.bit_depth > 16) throw ValidationError("bad_scene", "bit depth must lie in [0, 16]");
    if (cfg.lights.empty()) throw ValidationError("bad_scene", "need at least one light");
    if (cfg.albedo.empty()) throw ValidationError("bad_scene", "need at least one albedo channel");
    if (cfg.viewer.x() != 0.0 || cfg.viewer.y() != 0.0)
        throw ValidationError("bad_scene", "the renderer assumes the viewer (0, 0, 1)");
    for (const auto& l : cfg.lights) require_upper_hemisphere(l, "light");
    for (const auto& a : cfg.albedo)
        if (!a.same_shape(cfg.height)) throw ValidationError("shape_mismatch", "albedo and height differ in shape");

    const int w = cfg.height.width(), h = cfg.height.height();
    const std::size_t n = cfg.height.size();
    CapturedStack out;
    out.height = cfg.height;
    out.albedo = cfg.albedo;
    out.lights = cfg.lights;
    out.eta = cfg.eta;

    if (cfg.gradient_source == GradientSource::Analytic) {
        if (!cfg.analytic || !cfg.analytic->same_shape(cfg.height))
            throw ValidationError("bad_scene", "analytic gradient source requires a matching gradient grid");
        out.gradient = *cfg.analytic;
        out.gradient.copy_mask_from(cfg.height);
    } else {
        out.gradient = build_gradient_operator(cfg.height).apply(cfg.height);
    }

    out.normals = PixelGrid<Vec3>(w, h);
    out.rho = Grid(w, h);
    out.phi = Grid(w, h);
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const bool valid = cfg.height.valid(p);
        out.normals.set_valid(p, valid);
        out.rho.set_valid(p, valid);
        out.phi.set_valid(p, valid);
        if (!valid) continue;
        const UnitVector3 nrm = optics::normal_from_gradient(out.gradient[p]);
        out.normals[p] = nrm.vec();
        const double theta = std::acos(std::clamp(nrm.dot(cfg.viewer), -1.0, 1.0));
        const double rho = optics::rho_from_zenith(std::min(theta, optics::kMaxZenith), cfg.eta);
        double phi = std::atan2(nrm.x(), nrm.y());
        if (phi < 0.0) phi += M_PI;
        if (phi >= M_PI) phi -= M_PI;
        out.rho[p] = rho;
        out.phi[p] = phi;
        a[p] = rho * std::cos(2.0 * phi);
        b[p] = rho * std::sin(2.0 * phi);
    }

    const int colours = static_cast<int>(cfg.albedo.size());
    const int lights = static_cast<int>(cfg.lights.size());
    out.stack.angles = cfg.polariser_angles;
    out.stack.lights = lights;
    out.stack.colours = colours;
    const std::size_t nangles = cfg.polariser_angles.size();
    const double levels = cfg.bit_depth > 0 ? std::ldexp(1.0, cfg.bit_depth) - 1.0 : 0.0;

    std::vector<double> sample(n);
    for (int l = 0; l < lights; ++l) {
        for (int c = 0; c < colours; ++c) {
            Grid iun(w, h);
            iun.copy_mask_from(cfg.height);
            for (std::size_t p = 0; p < n; ++p)
                iun[p] = iun.valid(p) ? optics::lambert_intensity(out.gradient[p], cfg.lights[l], cfg.albedo[c][p]) : 0.0;
            const int channel = l * colours + c;
            for (std::size_t j = 0; j < nangles; ++j) {
                const double th = cfg.polariser_angles[j];
                simd::modulate(iun.values(), a, b, std::cos(2.0 * th), std::sin(2.0 * th), sample);
                Grid img(w, h);
                img.copy_mask_from(cfg.height);
                const std::uint64_t base = (static_cast<std::uint64_t>(channel) * nangles + j) * n;
                for (std::size_t p = 0; p < n; ++p) {
                    if (!img.valid(p)) continue;
                    double v = sample[p];
                    if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * counter_gaussian(cfg.seed, base + p);
                    v = std::clamp(v, 0.0, 1.0);
                    if (levels > 0.0) v = std::round(v * levels) / levels;
                    img[p] = v;
                }
                out.stack.images.push_back(std::move(img));
            }
            out.i_un.push_back(std::move(iun));
        }
    }
    return out;
}

void apply_disc_mask(Grid& height, double radius) {
    if (radius < 0.0) throw ValidationError("bad_config", "mask radius must be non-negative");
    if (radius == 0.0) return;
    const double cx = (height.width() - 1) / 2.0, cy = (height.height() - 1) / 2.0;
    for (int y = 0; y < height.height(); ++y)
        for (int x = 0; x < height.width(); ++x)
            if (std::hypot(x - cx, y - cy) > radius) height.set_valid(height.index(x, y), false);
}

SceneConfig scene_from_config(const io::KeyValueConfig& kv) {
    const int w = kv.get_int("width", 128);
    const int h = kv.get_int("height", 128);
    const int colours = kv.get_int("colours", 1);

    SurfaceParams sp;
    const auto surface = kv.get_string("surface", "gaussian");
    if (surface == "plane") sp.kind = SurfaceKind::Plane;
    else if (surface == "gaussian") sp.kind = SurfaceKind::GaussianPeak;
    else if (surface == "file") sp.kind = SurfaceKind::FromFile;
    else throw ValidationError("bad_config", "unknown surface kind '" + surface + "'");
    sp.amplitude = kv.get_double("amplitude", sp.amplitude);
    sp.width = kv.get_double("sigma_width", sp.width);
    sp.plane_a = kv.get_double("plane_a", 0.0);
    sp.plane_b = kv.get_double("plane_b", 0.0);
    sp.plane_c = kv.get_double("plane_c", 0.0);
    sp.file = kv.get_string("surface_file", "");

    AlbedoParams ap;
    const auto albedo = kv.get_string("albedo", "uniform");
    if (albedo == "uniform") ap.kind = AlbedoKind::Uniform;
    else if (albedo == "checkerboard") ap.kind = AlbedoKind::Checkerboard;
    else throw ValidationError("bad_config", "unknown albedo kind '" + albedo + "'");
    ap.levels = kv.get_list("albedo_levels", ap.levels);
    ap.low_levels = kv.get_list("albedo_low", ap.low_levels);
    ap.square = kv.get_int("checker_size", ap.square);

    SceneConfig cfg;
    cfg.height = make_surface(sp, w, h);
    apply_disc_mask(cfg.height, kv.get_double("mask_radius", 0.0));
    cfg.albedo = make_albedo(ap, cfg.height.width(), cfg.height.height(), colours);

    const auto lights = kv.get_list("lights", {1, 0, 5, -1, -2, 7});
    if (lights.empty() || lights.size() % 3 != 0)
        throw ValidationError("bad_config", "lights must be a list of x,y,z triples");
    for (std::size_t i = 0; i < lights.size(); i += 3)
        cfg.lights.push_back(require_upper_hemisphere(
            UnitVector3::normalised(lights[i], lights[i + 1], lights[i + 2]), "light"));

    cfg.eta = RefractiveIndex(kv.get_double("eta", 1.5));
    if (kv.has("angles")) {
        for (double d : kv.get_list("angles", {})) cfg.polariser_angles.push_back(d * M_PI / 180.0);
    } else {
        cfg.polariser_angles = angle_schedule_deg(kv.get_double("angles_start", 0.0),
                                                  kv.get_double("angles_step", 10.0),
                                                  kv.get_int("angles_count", 18));
    }
    cfg.noise_sigma = kv.get_double("noise_sigma", 0.0);
    cfg.bit_depth = kv.get_int("bit_depth", 8);
    const double seed = kv.get_double("seed", 1.0);
    if (seed < 0 || seed != std::floor(seed)) throw ValidationError("bad_config", "seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto grad = kv.get_string("gradient", "discrete");
    if (grad == "discrete") {
        cfg.gradient_source = GradientSource::Discrete;
    } else if (grad == "analytic") {
        cfg.gradient_source = GradientSource::Analytic;
        cfg.analytic = analytic_gradient(sp, w, h);
    } else {
        throw ValidationError("bad_config", "gradient must be discrete or analytic");
    }
    return cfg;
}

}  // namespace synth
}  // namespace phpol
