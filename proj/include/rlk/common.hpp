#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rlk {

// Error taxonomy. The CLI maps these onto exit codes: validation-type
// failures (shape/domain/config/validation) exit 1, I/O failures exit 2.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) {
    double n = norm(v);
    if (n < 1e-12) throw DomainError("cannot normalize zero vector");
    return v / n;
}

// Unit light direction on the visible hemisphere (z component > 0).
struct LightDirection {
    Vec3 w;

    explicit LightDirection(const Vec3& v) : w(normalize(v)) {
        if (w.z <= 0.0) throw DomainError("light below visible hemisphere");
    }
    static LightDirection zenith() { return LightDirection(Vec3(0, 0, 1)); }
};

// Physical to-light unit vector in camera coordinates. Stored directions use
// z > 0 for "toward the camera side"; camera space has +z into the scene,
// so the actual ray direction flips z.
inline Vec3 to_light_camera(const LightDirection& w) {
    return {w.w.x, w.w.y, -w.w.z};
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace rlk
