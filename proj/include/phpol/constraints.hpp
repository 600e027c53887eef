#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "phpol/pixel_grid.hpp"
#include "phpol/poldecomp.hpp"
#include "phpol/types.hpp"

namespace phpol {

enum class RowKind : std::uint8_t { DopRatio, IntensityRatio, Phase, SpecularNormal };
const char* to_string(RowKind kind);

/// One linear equation b . grad z = h at a pixel.
struct ConstraintRow {
    double bx = 0.0;
    double by = 0.0;
    double h = 0.0;
    double weight = 1.0;
    RowKind kind = RowKind::Phase;

    double residual(const Gradient2& g) const { return bx * g.zx + by * g.zy - h; }
};

enum class MethodVariant { Srt16, Prop1, Prop2, Prop3 };
const char* to_string(MethodVariant v);
MethodVariant parse_variant(const std::string& name);

/// true = specular-dominant pixel.
using SpecularMask = PixelGrid<std::uint8_t>;

/// Per-pixel stacks of constraint rows (compressed by pixel).
class ConstraintField {
public:
    ConstraintField() = default;
    ConstraintField(int width, int height, std::vector<std::uint8_t> domain);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint8_t>& domain() const { return domain_; }
    std::size_t pixel_count() const { return domain_.size(); }
    std::size_t row_count() const { return rows_.size(); }

    std::span<const ConstraintRow> rows_at(std::size_t pixel) const {
        return std::span<const ConstraintRow>(rows_).subspan(offsets_[pixel], offsets_[pixel + 1] - offsets_[pixel]);
    }

    /// Rows must be appended pixel by pixel in raster order.
    void begin_pixel(std::size_t pixel);
    void add(const ConstraintRow& row) { rows_.push_back(row); }
    void finish();

    /// Multiplies every row weight at a pixel (tests, custom weighting).
    void scale_pixel(std::size_t pixel, double factor);

    /// max over domain pixels and rows of |b . g - h|.
    double max_residual(const GradientGrid& g) const;

    /// Debug dump: x,y,kind,bx,by,h,weight per row.
    void write_csv(std::ostream& out) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> domain_;
    std::vector<std::size_t> offsets_;
    std::vector<ConstraintRow> rows_;
    std::size_t next_pixel_ = 0;
};

namespace constraints {

struct Thresholds {
    double min_intensity = 1e-4;
    double min_f = 1e-3;
};

struct RowWeights {
    double dop = 1.0;
    double intensity = 1.0;
    double phase = 1.0;
    double specular = 1.0;
};

struct AssemblyOptions {
    Thresholds thresholds;
    RowWeights weights;
    double coplanar_tolerance = 1e-8;
};

struct Lighting {
    UnitVector3 s;
    std::optional<UnitVector3> t;
    UnitVector3 v;
};

/// DOP ratio: b = i_un v~ - albedo f s~, h = i_un v3 - albedo f s3.
/// Empty when i_un or f is below threshold (or albedo is not positive).
/// Throws ValidationError when s == v.
std::optional<ConstraintRow> dop_ratio_row(double i_un, double f, double albedo, const UnitVector3& s,
                                           const UnitVector3& v, const Thresholds& th = {});

/// Intensity ratio between images under s (i1) and t (i2):
/// b = i2 s~ - i1 t~, h = i2 s3 - i1 t3. Empty when both intensities are below
/// threshold. Throws ValidationError when s == t.
std::optional<ConstraintRow> intensity_ratio_row(double i1, double i2, const UnitVector3& s, const UnitVector3& t,
                                                 const Thresholds& th = {});

/// Collinearity of the gradient with the phase direction:
/// b = (-cos phi', sin phi'), h = 0, phi' = phi + pi/2 at specular pixels.
ConstraintRow phase_row(double phi, bool specular);

/// Two rows pinning the gradient to the halfway vector m = (s+v)/|s+v|:
/// grad z = (-m1/m3, -m2/m3). Throws NumericalError when m3 is not positive.
std::array<ConstraintRow, 2> specular_normal_rows(const UnitVector3& s, const UnitVector3& v);

/// Unified per-pixel (B, h) for a method variant. `albedo` has one grid per
/// colour (or one grid broadcast to all colours) and is required by every
/// variant that uses DOP ratio rows. Colour channels replicate the DOP ratio
/// and intensity ratio rows. Specular pixels swap photometric rows for the
/// halfway-vector rows and shift the phase.
ConstraintField assemble(MethodVariant variant, const PolarisationImage& pol, const Lighting& lighting,
                         std::span<const Grid> albedo, const SpecularMask* specular, const RefractiveIndex& eta,
                         const AssemblyOptions& opts = {});

/// Per-pixel SRT16 matrix [[b^(f,i)], [-cos phi, sin phi]].
std::array<double, 4> srt16_pixel_matrix(double i_un, double f, double albedo, const UnitVector3& s, double phi,
                                         const UnitVector3& v);

enum class Rank { Full, Deficient };
/// Deficient iff |det B| < eps, B row-major 2x2.
Rank rank_check_srt16(const std::array<double, 4>& b, double eps = 1e-12);

/// Flags the brightest `fraction` of pixels (by the channel-mean i_un).
SpecularMask specular_mask_from_percentile(const PolarisationImage& pol, double fraction = 0.02);

/// Determinant of [s t v] (columns); zero when the three are coplanar.
double coplanarity(const UnitVector3& s, const UnitVector3& t, const UnitVector3& v);

}  // namespace constraints
}  // namespace phpol
