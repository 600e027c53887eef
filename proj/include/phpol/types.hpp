#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phpol {

/// Raised for malformed inputs and configurations (CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Raised when a numerical stage cannot produce a result (CLI exit code 2).
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Surface slope (z_x, z_y) in height units per pixel.
struct Gradient2 {
    double zx = 0.0;
    double zy = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
};

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Direction on the unit sphere. Construction normalises; the zero vector is rejected.
class UnitVector3 {
public:
    UnitVector3() : v_{0.0, 0.0, 1.0} {}

    static UnitVector3 normalised(double x, double y, double z) { return normalised(Vec3{x, y, z}); }
    static UnitVector3 normalised(const Vec3& v) {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw ValidationError("zero_vector", "cannot normalise a zero or non-finite vector");
        return UnitVector3(v * (1.0 / n));
    }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }
    double dot(const UnitVector3& o) const { return v_.dot(o.v_); }
    double dot(const Vec3& o) const { return v_.dot(o); }

    /// Convex/concave twin: diag(-1, -1, 1) applied to the vector.
    UnitVector3 flipped() const { return UnitVector3(Vec3{-v_.x, -v_.y, v_.z}); }

    bool operator==(const UnitVector3& o) const {
        return v_.x == o.v_.x && v_.y == o.v_.y && v_.z == o.v_.z;
    }

private:
    explicit UnitVector3(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

/// Lights and the viewer must lie in the upper hemisphere.
inline const UnitVector3& require_upper_hemisphere(const UnitVector3& v, const char* what) {
    if (!(v.z() > 0.0))
        throw ValidationError("lower_hemisphere", std::string(what) + " must have a positive z component");
    return v;
}

inline double angle_between_deg(const UnitVector3& a, const UnitVector3& b) {
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

class RefractiveIndex {
public:
    explicit RefractiveIndex(double eta = 1.5) : eta_(eta) {
        if (!(eta > 1.0) || !std::isfinite(eta))
            throw ValidationError("bad_refractive_index", "refractive index must be finite and > 1");
    }
    double value() const { return eta_; }

private:
    double eta_;
};

inline const UnitVector3 kViewer{};

}  // namespace phpol
