#include "phpol/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phpol/optics.hpp"

namespace phpol {

const char* to_string(RowKind kind) {
    switch (kind) {
        case RowKind::DopRatio: return "dop-ratio";
        case RowKind::IntensityRatio: return "intensity-ratio";
        case RowKind::Phase: return "phase";
        case RowKind::SpecularNormal: return "specular-normal";
    }
    return "unknown";
}

const char* to_string(MethodVariant v) {
    switch (v) {
        case MethodVariant::Srt16: return "srt16";
        case MethodVariant::Prop1: return "prop1";
        case MethodVariant::Prop2: return "prop2";
        case MethodVariant::Prop3: return "prop3";
    }
    return "unknown";
}

MethodVariant parse_variant(const std::string& name) {
    if (name == "srt16") return MethodVariant::Srt16;
    if (name == "prop1") return MethodVariant::Prop1;
    if (name == "prop2") return MethodVariant::Prop2;
    if (name == "prop3") return MethodVariant::Prop3;
    throw ValidationError("bad_variant", "unknown method variant '" + name + "'");
}

ConstraintField::ConstraintField(int width, int height, std::vector<std::uint8_t> domain)
    : width_(width), height_(height), domain_(std::move(domain)), offsets_(domain_.size() + 1, 0) {
    if (domain_.size() != static_cast<std::size_t>(width) * height)
        throw ValidationError("shape_mismatch", "constraint domain does not match the raster");
}

void ConstraintField::begin_pixel(std::size_t pixel) {
    if (pixel < next_pixel_ || pixel >= domain_.size())
        throw std::logic_error("constraint rows must be added in raster order");
    for (; next_pixel_ <= pixel; ++next_pixel_) offsets_[next_pixel_] = rows_.size();
}

void ConstraintField::finish() {
    for (; next_pixel_ <= domain_.size(); ++next_pixel_) offsets_[next_pixel_] = rows_.size();
}

void ConstraintField::scale_pixel(std::size_t pixel, double factor) {
    for (std::size_t k = offsets_[pixel]; k < offsets_[pixel + 1]; ++k) rows_[k].weight *= factor;
}

double ConstraintField::max_residual(const GradientGrid& g) const {
    double worst = 0.0;
    for (std::size_t p = 0; p < domain_.size(); ++p) {
        if (!domain_[p]) continue;
        for (const auto& r : rows_at(p)) worst = std::max(worst, std::fabs(r.residual(g[p])));
    }
    return worst;
}

void ConstraintField::write_csv(std::ostream& out) const {
    out << "x,y,kind,bx,by,h,weight\n";
    out.precision(17);
    for (std::size_t p = 0; p < domain_.size(); ++p) {
        for (const auto& r : rows_at(p))
            out << p % width_ << ',' << p / width_ << ',' << to_string(r.kind) << ',' << r.bx << ',' << r.by << ','
                << r.h << ',' << r.weight << '\n';
    }
}

namespace constraints {
namespace {

bool same_direction(const UnitVector3& a, const UnitVector3& b) {
    return std::fabs(a.x() - b.x()) < 1e-12 && std::fabs(a.y() - b.y()) < 1e-12 && std::fabs(a.z() - b.z()) < 1e-12;
}

bool uses_phase(MethodVariant v) { return v != MethodVariant::Prop2; }
bool uses_dop(MethodVariant v) { return v != MethodVariant::Prop1; }
bool uses_intensity_ratio(MethodVariant v) { return v != MethodVariant::Srt16; }

}  // namespace

std::optional<ConstraintRow> dop_ratio_row(double i_un, double f, double albedo, const UnitVector3& s,
                                           const UnitVector3& v, const Thresholds& th) {
    if (same_direction(s, v))
        throw ValidationError("light_equals_viewer", "DOP ratio constraint needs the light to differ from the viewer");
    if (!(i_un >= th.min_intensity) || !(f >= th.min_f) || !(albedo > 0.0)) return std::nullopt;
    const double gf = albedo * f;
    return ConstraintRow{i_un * v.x() - gf * s.x(), i_un * v.y() - gf * s.y(), i_un * v.z() - gf * s.z(), 1.0,
                         RowKind::DopRatio};
}

std::optional<ConstraintRow> intensity_ratio_row(double i1, double i2, const UnitVector3& s, const UnitVector3& t,
                                                 const Thresholds& th) {
    if (same_direction(s, t))
        throw ValidationError("identical_lights", "intensity ratio constraint needs two distinct light directions");
    if (!(i1 >= th.min_intensity) && !(i2 >= th.min_intensity)) return std::nullopt;
    return ConstraintRow{i2 * s.x() - i1 * t.x(), i2 * s.y() - i1 * t.y(), i2 * s.z() - i1 * t.z(), 1.0,
                         RowKind::IntensityRatio};
}

ConstraintRow phase_row(double phi, bool specular) {
    const double p = specular ? phi + M_PI / 2 : phi;
    return {-std::cos(p), std::sin(p), 0.0, 1.0, RowKind::Phase};
}

std::array<ConstraintRow, 2> specular_normal_rows(const UnitVector3& s, const UnitVector3& v) {
    const Vec3 sum = s.vec() + v.vec();
    if (!(sum.norm() > 1e-12)) throw NumericalError("degenerate_halfway", "light and viewer are opposite");
    const UnitVector3 m = UnitVector3::normalised(sum);
    if (!(m.z() > 1e-12)) throw NumericalError("degenerate_halfway", "halfway vector is not in the upper hemisphere");
    return {ConstraintRow{1.0, 0.0, -m.x() / m.z(), 1.0, RowKind::SpecularNormal},
            ConstraintRow{0.0, 1.0, -m.y() / m.z(), 1.0, RowKind::SpecularNormal}};
}

double coplanarity(const UnitVector3& s, const UnitVector3& t, const UnitVector3& v) {
    return s.dot(cross(t.vec(), v.vec()));
}

ConstraintField assemble(MethodVariant variant, const PolarisationImage& pol, const Lighting& lighting,
                         std::span<const Grid> albedo, const SpecularMask* specular, const RefractiveIndex& eta,
                         const AssemblyOptions& opts) {
    const int colours = pol.colours();
    if (pol.i_un.empty() || colours < 1)
        throw ValidationError("bad_polarisation_image", "polarisation image has no intensity channels");
    require_upper_hemisphere(lighting.s, "light s");
    require_upper_hemisphere(lighting.v, "viewer");

    const bool two_lights = variant != MethodVariant::Srt16;
    if (two_lights) {
        if (!lighting.t) throw ValidationError("missing_input", std::string(to_string(variant)) + " needs a second light t");
        require_upper_hemisphere(*lighting.t, "light t");
        if (pol.lights < 2)
            throw ValidationError("missing_input", std::string(to_string(variant)) + " needs intensities under two lights");
        if (same_direction(lighting.s, *lighting.t))
            throw ValidationError("identical_lights", "the two light directions must differ");
    }
    if (uses_dop(variant)) {
        if (albedo.empty())
            throw ValidationError("missing_input", std::string(to_string(variant)) + " needs an albedo map");
        if (albedo.size() != 1 && albedo.size() != static_cast<std::size_t>(colours))
            throw ValidationError("missing_input", "albedo needs one grid or one grid per colour");
        for (const auto& a : albedo)
            if (!a.same_shape(pol.rho)) throw ValidationError("shape_mismatch", "albedo differs in shape");
        if (same_direction(lighting.s, lighting.v) || (two_lights && same_direction(*lighting.t, lighting.v)))
            throw ValidationError("light_equals_viewer", "DOP ratio rows need lights distinct from the viewer");
    }
    if (variant == MethodVariant::Prop2 &&
        std::fabs(coplanarity(lighting.s, *lighting.t, lighting.v)) < opts.coplanar_tolerance)
        throw ValidationError("coplanar_lights", "prop2 needs s, t and v non-coplanar");
    if (specular && !specular->same_shape(pol.rho))
        throw ValidationError("shape_mismatch", "specular mask differs in shape");

    const auto& w = opts.weights;
    const auto& th = opts.thresholds;
    std::array<ConstraintRow, 2> spec_rows{};
    if (specular) {
        spec_rows = specular_normal_rows(lighting.s, lighting.v);
        for (auto& r : spec_rows) r.weight = w.specular;
    }

    ConstraintField field(pol.rho.width(), pol.rho.height(), pol.mask());
    auto albedo_at = [&](int c, std::size_t p) {
        return albedo.size() == 1 ? albedo[0][p] : albedo[static_cast<std::size_t>(c)][p];
    };
    auto push = [&](std::optional<ConstraintRow> row, double weight) {
        if (!row) return;
        row->weight = weight;
        field.add(*row);
    };

    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        if (!pol.rho.valid(p)) continue;
        field.begin_pixel(p);
        const bool is_spec = specular && (*specular)[p] != 0;
        if (is_spec) {
            for (const auto& r : spec_rows) field.add(r);
        } else {
            const double f = optics::f_of_rho_clamped(pol.rho[p], eta);
            if (uses_dop(variant)) {
                for (int c = 0; c < colours; ++c)
                    push(dop_ratio_row(pol.iun(0, c)[p], f, albedo_at(c, p), lighting.s, lighting.v, th), w.dop);
                if (two_lights)
                    for (int c = 0; c < colours; ++c)
                        push(dop_ratio_row(pol.iun(1, c)[p], f, albedo_at(c, p), *lighting.t, lighting.v, th), w.dop);
            }
            if (uses_intensity_ratio(variant))
                for (int c = 0; c < colours; ++c)
                    push(intensity_ratio_row(pol.iun(0, c)[p], pol.iun(1, c)[p], lighting.s, *lighting.t, th),
                         w.intensity);
        }
        if (uses_phase(variant)) {
            auto r = phase_row(pol.phi[p], is_spec);
            r.weight = w.phase;
            field.add(r);
        }
    }
    field.finish();
    return field;
}

std::array<double, 4> srt16_pixel_matrix(double i_un, double f, double albedo, const UnitVector3& s, double phi,
                                         const UnitVector3& v) {
    const double gf = albedo * f;
    const auto ph = phase_row(phi, false);
    return {i_un * v.x() - gf * s.x(), i_un * v.y() - gf * s.y(), ph.bx, ph.by};
}

Rank rank_check_srt16(const std::array<double, 4>& b, double eps) {
    const double det = b[0] * b[3] - b[1] * b[2];
    return std::fabs(det) < eps ? Rank::Deficient : Rank::Full;
}

SpecularMask specular_mask_from_percentile(const PolarisationImage& pol, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("bad_fraction", "fraction must lie in [0, 1]");
    SpecularMask mask(pol.rho.width(), pol.rho.height(), 0);
    mask.copy_mask_from(pol.rho);
    std::vector<std::pair<double, std::size_t>> level;
    for (std::size_t p = 0; p < pol.rho.size(); ++p) {
        if (!pol.rho.valid(p)) continue;
        double sum = 0.0;
        for (const auto& g : pol.i_un) sum += g[p];
        level.emplace_back(sum / static_cast<double>(pol.i_un.size()), p);
    }
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(level.size())));
    std::partial_sort(level.begin(), level.begin() + static_cast<std::ptrdiff_t>(count), level.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t k = 0; k < count; ++k) mask[level[k].second] = 1;
    return mask;
}

}  // namespace constraints
}  // namespace phpol
