#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phpol/gradient_operator.hpp"
#include "phpol/pixel_grid.hpp"
#include "phpol/types.hpp"

namespace phpol {

namespace io {
class KeyValueConfig;
}

/// Polariser image sequence. Channels are light-major:
/// channel = light * colours + colour.
struct PolariserStack {
    std::vector<double> angles;  // radians
    int lights = 1;
    int colours = 1;
    std::vector<Grid> images;  // index: channel * angles.size() + j

    int channels() const { return lights * colours; }
    std::size_t angle_count() const { return angles.size(); }
    const Grid& at(int channel, std::size_t j) const { return images[channel * angles.size() + j]; }
    Grid& at(int channel, std::size_t j) { return images[channel * angles.size() + j]; }

    /// Stack restricted to a subset of lights, keeping every colour.
    PolariserStack select_lights(const std::vector<int>& which) const;
};

namespace synth {

enum class SurfaceKind { Plane, GaussianPeak, FromFile };

struct SurfaceParams {
    SurfaceKind kind = SurfaceKind::GaussianPeak;
    double amplitude = 20.0;  // gaussian peak height (pixels)
    double width = 16.0;      // gaussian 1/e radius (pixels)
    double plane_a = 0.0;     // z = a x + b y + c
    double plane_b = 0.0;
    double plane_c = 0.0;
    std::filesystem::path file;
};

/// Height map in pixels, sampled at integer pixel coordinates. The gaussian
/// peak is centred on the raster: z = A exp(-((x-cx)^2 + (y-cy)^2) / w^2).
Grid make_surface(const SurfaceParams& params, int width, int height);

/// Drops pixels farther than `radius` from the raster centre out of the mask.
/// A radius of 0 leaves the mask unchanged.
void apply_disc_mask(Grid& height, double radius);

/// Analytic gradient of a plane or gaussian peak; throws for file surfaces.
GradientGrid analytic_gradient(const SurfaceParams& params, int width, int height);

enum class AlbedoKind { Uniform, Checkerboard };

struct AlbedoParams {
    AlbedoKind kind = AlbedoKind::Uniform;
    std::vector<double> levels{0.8};     // uniform value, or checkerboard "high" squares
    std::vector<double> low_levels{0.4};  // checkerboard "low" squares
    int square = 16;                     // checker square size in pixels
};

/// One grid per colour channel. Level vectors of length 1 broadcast to every channel.
ChannelGrids make_albedo(const AlbedoParams& params, int width, int height, int colours);

enum class GradientSource {
    /// Finite differences of the height map with the solver's stencil.
    Discrete,
    /// Closed-form gradient (plane / gaussian peak only).
    Analytic,
};

struct SceneConfig {
    Grid height;
    ChannelGrids albedo;
    std::vector<UnitVector3> lights;
    UnitVector3 viewer;
    RefractiveIndex eta{1.5};
    std::vector<double> polariser_angles;  // radians
    double noise_sigma = 0.0;              // fraction of full scale
    int bit_depth = 8;                     // 0 disables quantisation
    std::uint64_t seed = 1;
    GradientSource gradient_source = GradientSource::Discrete;
    std::optional<GradientGrid> analytic;  // required for GradientSource::Analytic
};

/// Rendered stack plus the ground truth it was made from.
struct CapturedStack {
    PolariserStack stack;
    Grid height;
    GradientGrid gradient;
    PixelGrid<Vec3> normals;
    ChannelGrids i_un;  // light-major, noiseless
    Grid rho;
    Grid phi;
    ChannelGrids albedo;
    std::vector<UnitVector3> lights;
    RefractiveIndex eta{1.5};
};

/// Polariser angles start, start+step, ... (count of them), in degrees on input.
std::vector<double> angle_schedule_deg(double start_deg, double step_deg, int count);

/// Lambertian shading, diffuse polarisation and polariser transmission per
/// pixel, then additive Gaussian noise, saturation at 1 and quantisation.
/// Noise is derived from (seed, channel, angle, pixel) counters, so the result
/// does not depend on evaluation order.
CapturedStack render_stack(const SceneConfig& cfg);

/// Standard normal deviate for a (seed, counter) pair.
double counter_gaussian(std::uint64_t seed, std::uint64_t counter);

/// Builds a scene from flat key = value configuration. Keys: width, height,
/// surface (plane|gaussian|file), amplitude, sigma_width, plane_a, plane_b,
/// plane_c, surface_file, albedo (uniform|checkerboard), albedo_levels,
/// albedo_low, checker_size, colours, lights (x,y,z; x,y,z ...), eta,
/// angles_start, angles_step, angles_count (degrees) or angles (list, degrees),
/// noise_sigma, bit_depth, seed, gradient (discrete|analytic), mask_radius
/// (pixels from the raster centre kept in the domain; 0 keeps all).
SceneConfig scene_from_config(const io::KeyValueConfig& cfg);

}  // namespace synth
}  // namespace phpol
