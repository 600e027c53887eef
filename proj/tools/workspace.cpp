#include "workspace.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace phpol::cli {
namespace {

std::string join(const std::vector<double>& v) {
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        if (i) out += ", ";
        out += buf;
    }
    return out;
}

std::string number(double x) { return join({x}); }

// Float maps store masked pixels as NaN, which loses flags such as
// `clamped`; they are written as 0/1 values instead.
Grid as_grid(const PixelGrid<std::uint8_t>& g, const Grid& like) {
    Grid out(like.width(), like.height(), 0.0);
    out.copy_mask_from(like);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = g.empty() ? 0.0 : g[p];
    return out;
}

}  // namespace

std::vector<double> parse_vector(const std::string& text, std::size_t expected) {
    auto v = io::parse_number_list(text);
    if (v.size() != expected)
        throw ValidationError("bad_vector", "expected " + std::to_string(expected) + " numbers in '" + text + "'");
    return v;
}

io::KeyValueConfig describe_capture(const synth::SceneConfig& scene, io::KeyValueConfig base) {
    std::vector<double> lights, angles;
    for (const auto& l : scene.lights) lights.insert(lights.end(), {l.x(), l.y(), l.z()});
    for (double a : scene.polariser_angles) angles.push_back(a * 180.0 / M_PI);
    base.set("lights", join(lights));
    base.set("angles", join(angles));
    base.set("colours", std::to_string(scene.albedo.size()));
    base.set("eta", number(scene.eta.value()));
    base.set("noise_sigma", number(scene.noise_sigma));
    base.set("bit_depth", std::to_string(scene.bit_depth));
    base.set("seed", std::to_string(scene.seed));
    return base;
}

CaptureMeta read_capture_meta(const fs::path& scene_cfg) {
    const auto kv = io::KeyValueConfig::load(scene_cfg);
    CaptureMeta m;
    const auto lights = kv.get_list("lights", {});
    if (lights.empty() || lights.size() % 3 != 0)
        throw ValidationError("bad_config", scene_cfg.string() + ": lights must be x,y,z triples");
    for (std::size_t i = 0; i < lights.size(); i += 3)
        m.lights.push_back(UnitVector3::normalised(lights[i], lights[i + 1], lights[i + 2]));
    m.colours = kv.get_int("colours", 1);
    if (m.colours < 1) throw ValidationError("bad_config", "colours must be positive");
    for (double d : kv.get_list("angles", {})) m.angles.push_back(d * M_PI / 180.0);
    if (m.angles.empty()) throw ValidationError("bad_config", scene_cfg.string() + ": no polariser angles");
    m.eta = kv.get_double("eta", 1.5);
    m.noise_sigma = kv.get_double("noise_sigma", 0.0);
    return m;
}

void write_capture(const fs::path& dir, const synth::CapturedStack& cap) {
    io::write_float_map(dir / "stack.phmap", cap.stack.images);
    io::write_float_map(dir / "height.phmap", cap.height);
    io::write_float_map(dir / "albedo.phmap", cap.albedo);
    ChannelGrids n(3, Grid(cap.normals.width(), cap.normals.height()));
    for (auto& g : n) g.copy_mask_from(cap.normals);
    for (std::size_t p = 0; p < cap.normals.size(); ++p) {
        n[0][p] = cap.normals[p].x;
        n[1][p] = cap.normals[p].y;
        n[2][p] = cap.normals[p].z;
    }
    io::write_float_map(dir / "normals.phmap", n);
}

PolariserStack read_stack(const fs::path& file, const CaptureMeta& meta) {
    PolariserStack stack;
    stack.angles = meta.angles;
    stack.lights = static_cast<int>(meta.lights.size());
    stack.colours = meta.colours;
    stack.images = io::read_float_map(file);
    if (stack.images.size() != static_cast<std::size_t>(stack.channels()) * stack.angle_count())
        throw ValidationError("bad_stack", file.string() + " has " + std::to_string(stack.images.size()) +
                                               " channels, expected lights x colours x angles = " +
                                               std::to_string(stack.channels() * stack.angle_count()));
    // A stack is raw data: every pixel is observed even if it was written as NaN.
    for (auto& g : stack.images)
        for (std::size_t p = 0; p < g.size(); ++p)
            if (!g.valid(p)) {
                g[p] = 0.0;
                g.set_valid(p, true);
            }
    return stack;
}

void write_polarisation(const fs::path& dir, const PolarisationImage& pol) {
    io::write_float_map(dir / "iun.phmap", pol.i_un);
    io::write_float_map(dir / "rho.phmap", pol.rho);
    io::write_float_map(dir / "phi.phmap", pol.phi);
    if (!pol.rho_se.empty()) io::write_float_map(dir / "rho_se.phmap", pol.rho_se);
    io::write_float_map(dir / "clamped.phmap", as_grid(pol.clamped, pol.rho));
    io::KeyValueConfig kv;
    kv.set("lights", std::to_string(pol.lights));
    kv.set("noise_sigma", number(pol.noise_sigma));
    std::FILE* f = std::fopen((dir / "polar.cfg").c_str(), "w");
    if (!f) throw ValidationError("io_error", "cannot write " + (dir / "polar.cfg").string());
    std::fputs(kv.to_string().c_str(), f);
    std::fclose(f);
}

bool has_polarisation(const fs::path& dir) {
    return fs::exists(dir / "iun.phmap") && fs::exists(dir / "rho.phmap") && fs::exists(dir / "phi.phmap") &&
           fs::exists(dir / "polar.cfg");
}

PolarisationImage read_polarisation(const fs::path& dir) {
    const auto kv = io::KeyValueConfig::load(dir / "polar.cfg");
    PolarisationImage pol;
    pol.lights = kv.get_int("lights", 1);
    pol.noise_sigma = kv.get_double("noise_sigma", 0.0);
    pol.i_un = io::read_float_map(dir / "iun.phmap");
    pol.rho = io::read_single_channel(dir / "rho.phmap");
    pol.phi = io::read_single_channel(dir / "phi.phmap");
    if (pol.lights < 1 || pol.i_un.size() % static_cast<std::size_t>(pol.lights) != 0)
        throw ValidationError("bad_polarisation_image", "intensity channels do not split evenly across lights");
    for (const auto& g : pol.i_un)
        if (!g.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "polarisation maps differ in shape");
    if (!pol.phi.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "polarisation maps differ in shape");
    // The domain is the mask of rho; the other maps follow it.
    for (auto& g : pol.i_un) g.copy_mask_from(pol.rho);
    pol.phi.copy_mask_from(pol.rho);
    if (fs::exists(dir / "rho_se.phmap")) {
        pol.rho_se = io::read_single_channel(dir / "rho_se.phmap");
        pol.rho_se.copy_mask_from(pol.rho);
    }
    pol.clamped = PixelGrid<std::uint8_t>(pol.rho.width(), pol.rho.height(), 0);
    pol.clamped.copy_mask_from(pol.rho);
    if (fs::exists(dir / "clamped.phmap")) {
        const Grid c = io::read_single_channel(dir / "clamped.phmap");
        if (!c.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "clamped map differs in shape");
        for (std::size_t p = 0; p < c.size(); ++p) pol.clamped[p] = c.valid(p) && c[p] > 0.5;
    }
    return pol;
}

PixelGrid<Vec3> read_normals(const fs::path& file) {
    const auto ch = io::read_float_map(file);
    if (ch.size() != 3) throw ValidationError("bad_float_map", file.string() + " must have three channels");
    PixelGrid<Vec3> n(ch[0].width(), ch[0].height());
    n.copy_mask_from(ch[0]);
    for (std::size_t p = 0; p < n.size(); ++p) n[p] = Vec3{ch[0][p], ch[1][p], ch[2][p]};
    return n;
}

Grid normalised_for_preview(const Grid& g) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t p = 0; p < g.size(); ++p)
        if (g.valid(p)) {
            lo = std::min(lo, g[p]);
            hi = std::max(hi, g[p]);
        }
    Grid out = g;
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t p = 0; p < g.size(); ++p) out[p] = g.valid(p) ? (g[p] - lo) / span : 0.0;
    return out;
}

}  // namespace phpol::cli
