#pragma once

#include <optional>
#include <span>

#include "phpol/constraints.hpp"
#include "phpol/gradient_operator.hpp"
#include "phpol/pixel_grid.hpp"

namespace phpol::albedo {

struct AlbedoMap {
    ChannelGrids albedo;                // one grid per colour, >= 0
    PixelGrid<std::uint8_t> undefined;  // no usable diffuse observation
    std::size_t undefined_count = 0;
};

/// Unit normals of a height map, differentiated with `op`.
PixelGrid<Vec3> normals_from_height(const Grid& z, const GradientOperator& op);

/// Per-pixel least-squares albedo from up to two Lambertian observations:
/// gamma = (i1 (n.s) + i2 (n.t)) / ((n.s)^2 + (n.t)^2), dropping observations
/// with shading <= eps and every observation at specular pixels. `i2` may be
/// empty (single light). Undefined pixels get 0 and a flag.
AlbedoMap albedo_pointwise(const PixelGrid<Vec3>& normals, std::span<const Grid> i1, std::span<const Grid> i2,
                           const UnitVector3& s, const std::optional<UnitVector3>& t, const SpecularMask* specular,
                           double eps = 1e-3);

/// Minimises sum_diffuse (gamma - pointwise)^2 + lambda sum ||grad gamma - g_ref||^2
/// with g_ref the forward difference of the shading-normalised intensity
/// i / (n.s) under s (zero across specular, undefined or unlit pixels).
/// Undefined and specular pixels carry only the smoothness term. lambda = 0
/// returns the pointwise map.
AlbedoMap albedo_with_consistency(const AlbedoMap& pointwise, std::span<const Grid> i_ref,
                                  const PixelGrid<Vec3>& normals, const UnitVector3& s, const SpecularMask* specular,
                                  double lambda, double eps = 1e-3);

inline constexpr double kDefaultLambda = 0.1;

}  // namespace phpol::albedo
