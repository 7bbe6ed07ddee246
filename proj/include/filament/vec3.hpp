#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "filament/error.hpp"

namespace filament {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double k) { x *= k; y *= k; z *= k; return *this; }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double k, Vec3 a) { return a *= k; }
constexpr Vec3 operator*(Vec3 a, double k) { return a *= k; }
constexpr Vec3 operator/(Vec3 a, double k) { return a *= (1.0 / k); }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// A Vec3 whose length is one to within 1e-9; construction checks.
class UnitVec3 {
 public:
  static constexpr double kTolerance = 1e-9;

  explicit UnitVec3(const Vec3& v) : v_(v) {
    require(std::abs(norm(v) - 1.0) <= kTolerance, ErrorCode::InvalidParameter,
            "vector is not of unit length");
  }
  static UnitVec3 normalized(const Vec3& v) {
    const double n = norm(v);
    require(n > 0.0 && std::isfinite(n), ErrorCode::InvalidParameter, "cannot normalize zero vector");
    return UnitVec3(v / n);
  }

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }
  double operator[](int i) const { return v_[i]; }

 private:
  Vec3 v_;
};

// Tangent, normal, binormal. Stored as plain vectors so that integrators can
// carry them between re-orthonormalizations; `defect()` measures how far the
// triple is from a right-handed orthonormal basis.
struct FrenetFrame {
  Vec3 T{1.0, 0.0, 0.0};
  Vec3 n{0.0, 1.0, 0.0};
  Vec3 b{0.0, 0.0, 1.0};

  static FrenetFrame identity() { return {}; }

  double defect() const {
    double d = std::max({std::abs(dot(T, n)), std::abs(dot(T, b)), std::abs(dot(n, b)),
                         std::abs(norm(T) - 1.0), std::abs(norm(n) - 1.0), std::abs(norm(b) - 1.0)});
    return std::max(d, std::abs(dot(T, cross(n, b)) - 1.0));
  }

  // Modified Gram-Schmidt in the order T, n, b.
  void orthonormalize() {
    T = T / norm(T);
    n -= dot(T, n) * T;
    n = n / norm(n);
    b -= dot(T, b) * T;
    b -= dot(n, b) * n;
    b = b / norm(b);
  }
};

inline FrenetFrame checked_frame(const Vec3& T, const Vec3& n, const Vec3& b, double tol = 1e-8) {
  FrenetFrame f{T, n, b};
  require(f.defect() <= tol, ErrorCode::InvalidParameter, "frame is not orthonormal and right-handed");
  return f;
}

}  // namespace filament
