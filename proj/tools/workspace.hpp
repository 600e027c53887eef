#pragma once

// On-disk layout shared by the subcommands. A working directory holds the
// rendered stack, its ground truth, the decomposition and reconstructions:
//
//   scene.cfg       capture metadata (lights, colours, angles, eta, noise)
//   stack.phmap     lights x colours x angles channels, angle fastest
//   height.phmap    albedo.phmap    normals.phmap    ground truth
//   iun.phmap rho.phmap phi.phmap rho_se.phmap clamped.phmap polar.cfg
//   height_est.phmap albedo_est.phmap

#include <filesystem>
#include <vector>

#include "phpol/io.hpp"
#include "phpol/poldecomp.hpp"
#include "phpol/synth.hpp"

namespace phpol::cli {

namespace fs = std::filesystem;

struct CaptureMeta {
    std::vector<UnitVector3> lights;
    int colours = 1;
    std::vector<double> angles;  // radians
    double eta = 1.5;
    double noise_sigma = 0.0;
};

io::KeyValueConfig describe_capture(const synth::SceneConfig& scene, io::KeyValueConfig base);
CaptureMeta read_capture_meta(const fs::path& scene_cfg);

void write_capture(const fs::path& dir, const synth::CapturedStack& cap);
PolariserStack read_stack(const fs::path& file, const CaptureMeta& meta);

void write_polarisation(const fs::path& dir, const PolarisationImage& pol);
bool has_polarisation(const fs::path& dir);
PolarisationImage read_polarisation(const fs::path& dir);

PixelGrid<Vec3> read_normals(const fs::path& file);

/// Height mapped to [0, 1] over its domain for a preview.
Grid normalised_for_preview(const Grid& g);

std::vector<double> parse_vector(const std::string& text, std::size_t expected);

}  // namespace phpol::cli
