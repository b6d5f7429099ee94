#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "mesoray/error.hpp"

namespace mesoray {

using real = double;

inline constexpr real kInf = std::numeric_limits<real>::infinity();
inline constexpr real kPi = 3.14159265358979323846;

struct Vec2 {
    real u = 0, v = 0;

    constexpr Vec2 operator+(const Vec2& o) const { return {u + o.u, v + o.v}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {u - o.u, v - o.v}; }
    constexpr Vec2 operator*(real s) const { return {u * s, v * s}; }
    constexpr bool operator==(const Vec2&) const = default;
};

struct Vec3 {
    real x = 0, y = 0, z = 0;

    constexpr real operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr real& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(real s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(real s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(real s, const Vec3& v) { return v * s; }
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
constexpr real dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline real length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
constexpr Vec3 vmin(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 vmax(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<real, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 identity() { return {}; }
    static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
        return {{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
    }
    static constexpr Mat3 diagonal(const Vec3& d) { return {{d.x, 0, 0, 0, d.y, 0, 0, 0, d.z}}; }

    constexpr real operator()(int r, int c) const { return m[r * 3 + c]; }
    constexpr real& operator()(int r, int c) { return m[r * 3 + c]; }
    constexpr Vec3 column(int c) const { return {m[c], m[3 + c], m[6 + c]}; }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    constexpr Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
        return r;
    }
    constexpr Mat3 transposed() const {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }
    constexpr real determinant() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
    constexpr bool operator==(const Mat3&) const = default;
};

inline constexpr real kSingularThreshold = 1e-12;

inline Mat3 inverse(const Mat3& a) {
    const real det = a.determinant();
    if (!(std::abs(det) > kSingularThreshold)) throw SingularMatrixError("matrix is singular");
    const real inv = 1.0 / det;
    Mat3 r;
    r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) * inv;
    r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * inv;
    r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * inv;
    r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) * inv;
    r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * inv;
    r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * inv;
    r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) * inv;
    r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * inv;
    r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * inv;
    return r;
}

/// Unit quaternion, w + xi + yj + zk.
struct Quat {
    real w = 1, x = 0, y = 0, z = 0;

    static Quat axis_angle(const Vec3& axis, real angle) {
        const Vec3 a = normalize(axis);
        const real s = std::sin(angle * 0.5);
        return {std::cos(angle * 0.5), a.x * s, a.y * s, a.z * s};
    }
    Quat normalized() const {
        const real n = std::sqrt(w * w + x * x + y * y + z * z);
        return {w / n, x / n, y / n, z / n};
    }
    Mat3 to_matrix() const {
        const real xx = x * x, yy = y * y, zz = z * z;
        const real xy = x * y, xz = x * z, yz = y * z;
        const real wx = w * x, wy = w * y, wz = w * z;
        return {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
                 2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
                 2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
    }
    bool operator==(const Quat&) const = default;
};

/// Smallest rotation taking unit vector `from` onto unit vector `to`.
inline Mat3 rotation_between(const Vec3& from, const Vec3& to) {
    const real c = dot(from, to);
    const Vec3 axis = cross(from, to);
    const real s = length(axis);
    if (s < 1e-12) {
        if (c > 0) return Mat3::identity();
        Vec3 ortho = std::abs(from.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        ortho = normalize(cross(from, ortho));
        return Quat::axis_angle(ortho, kPi).to_matrix();
    }
    return Quat::axis_angle(axis / s, std::atan2(s, c)).to_matrix();
}

/// Affine map p -> linear * p + translation.
struct Affine {
    Mat3 linear;
    Vec3 translation;

    static Affine identity() { return {}; }
    static Affine translate(const Vec3& t) { return {Mat3::identity(), t}; }
    static Affine rotate(const Quat& q) { return {q.to_matrix(), {}}; }
    static Affine scale(const Vec3& s) { return {Mat3::diagonal(s), {}}; }

    Vec3 point(const Vec3& p) const { return linear * p + translation; }
    Vec3 vector(const Vec3& v) const { return linear * v; }
    bool operator==(const Affine&) const = default;
};

/// Applies `b` first, then `a`.
inline Affine affine_compose(const Affine& a, const Affine& b) {
    return {a.linear * b.linear, a.linear * b.translation + a.translation};
}

inline Affine operator*(const Affine& a, const Affine& b) { return affine_compose(a, b); }

inline Affine affine_invert(const Affine& a) {
    const Mat3 inv = inverse(a.linear);
    return {inv, -(inv * a.translation)};
}

struct Ray {
    Vec3 origin;
    Vec3 direction;
    real tMin = 0;
    real tMax = kInf;

    Vec3 at(real t) const { return origin + direction * t; }
};

/// Maps the ray into the space of `inv`. The direction is not renormalized so
/// the same t addresses the same point in both spaces.
inline Ray transform_ray(const Affine& inv, const Ray& ray) {
    return {inv.point(ray.origin), inv.vector(ray.direction), ray.tMin, ray.tMax};
}

struct Interval {
    real tEnter = 0;
    real tExit = 0;
};

struct Aabb {
    Vec3 min{kInf, kInf, kInf};
    Vec3 max{-kInf, -kInf, -kInf};

    static Aabb empty() { return {}; }
    bool is_empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
    void expand(const Vec3& p) { min = vmin(min, p); max = vmax(max, p); }
    void expand(const Aabb& b) { min = vmin(min, b.min); max = vmax(max, b.max); }
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }
    real diagonal() const { return is_empty() ? 0.0 : length(max - min); }
    bool contains(const Aabb& b) const {
        return min.x <= b.min.x && min.y <= b.min.y && min.z <= b.min.z &&
               max.x >= b.max.x && max.y >= b.max.y && max.z >= b.max.z;
    }
    bool contains(const Vec3& p) const {
        return min.x <= p.x && min.y <= p.y && min.z <= p.z && max.x >= p.x && max.y >= p.y && max.z >= p.z;
    }
    std::array<Vec3, 8> corners() const {
        std::array<Vec3, 8> c;
        for (int i = 0; i < 8; ++i)
            c[i] = {(i & 1) ? max.x : min.x, (i & 2) ? max.y : min.y, (i & 4) ? max.z : min.z};
        return c;
    }
    real surface_area() const {
        if (is_empty()) return 0;
        const Vec3 e = extent();
        return 2 * (e.x * e.y + e.y * e.z + e.z * e.x);
    }
    bool operator==(const Aabb&) const = default;
};

inline Aabb transform_aabb(const Affine& a, const Aabb& box) {
    Aabb out;
    if (box.is_empty()) return out;
    for (const Vec3& c : box.corners()) out.expand(a.point(c));
    return out;
}

/// Slab test. Returns the raw interval along the whole line; the caller
/// intersects it with the ray's own [tMin, tMax].
inline std::optional<Interval> ray_aabb(const Ray& ray, const Aabb& box) {
    real t0 = -kInf, t1 = kInf;
    for (int a = 0; a < 3; ++a) {
        const real o = ray.origin[a], d = ray.direction[a];
        if (d == 0) {
            if (o < box.min[a] || o > box.max[a]) return std::nullopt;
            continue;
        }
        const real inv = 1.0 / d;
        real ta = (box.min[a] - o) * inv, tb = (box.max[a] - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return Interval{t0, t1};
}

/// Smallest t in [tMin, tMax] on the sphere surface.
inline std::optional<real> ray_sphere(const Ray& ray, const Vec3& center, real radius) {
    const Vec3 l = ray.origin - center;
    const real a = dot(ray.direction, ray.direction);
    const real b = dot(l, ray.direction);
    const real c = dot(l, l) - radius * radius;
    // Perpendicular-foot form of the discriminant keeps grazing rays accurate.
    const Vec3 f = l - ray.direction * (b / a);
    const real disc = radius * radius - dot(f, f);
    if (disc < 0) return std::nullopt;
    const real sq = std::sqrt(a * disc);
    const real q = -b - std::copysign(sq, b);
    real t0, t1;
    if (q == 0) {
        t0 = t1 = -b / a;
    } else {
        t0 = c / q;
        t1 = q / a;
        if (t0 > t1) std::swap(t0, t1);
    }
    if (t0 >= ray.tMin && t0 <= ray.tMax) return t0;
    if (t1 >= ray.tMin && t1 <= ray.tMax) return t1;
    return std::nullopt;
}

struct TriangleHit {
    real t;
    real b1, b2;  // weights of v1 and v2; v0 gets 1 - b1 - b2
    bool frontFacing;
};

/// Moller-Trumbore with inclusive edges, so a ray through a shared edge is
/// reported by both neighbours; callers break the tie by primitive index.
inline std::optional<TriangleHit> ray_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1,
                                               const Vec3& v2) {
    constexpr real kEdgeEps = 1e-12;
    const Vec3 e1 = v1 - v0, e2 = v2 - v0;
    const Vec3 p = cross(ray.direction, e2);
    const real det = dot(e1, p);
    if (det == 0) return std::nullopt;
    const real inv = 1.0 / det;
    const Vec3 s = ray.origin - v0;
    const real b1 = dot(s, p) * inv;
    if (b1 < -kEdgeEps || b1 > 1 + kEdgeEps) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const real b2 = dot(ray.direction, q) * inv;
    if (b2 < -kEdgeEps || b1 + b2 > 1 + kEdgeEps) return std::nullopt;
    const real t = dot(e2, q) * inv;
    if (t < ray.tMin || t > ray.tMax) return std::nullopt;
    // det = -dir . (e1 x e2), so det > 0 means the ray opposes the normal.
    return TriangleHit{t, b1, b2, det > 0};
}

inline Vec3 barycentric_interp(const std::array<real, 3>& w, const Vec3& a, const Vec3& b, const Vec3& c) {
    return a * w[0] + b * w[1] + c * w[2];
}

/// Barycentric weights of `p` in the 2D triangle (a, b, c). Points outside the
/// triangle get weights outside [0, 1]. Throws on a zero-area triangle.
inline std::array<real, 3> barycentric_weights(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const real d = (b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v);
    if (std::abs(d) < 1e-18) throw DegenerateError("zero-area uv triangle");
    const real w1 = ((p.u - a.u) * (c.v - a.v) - (c.u - a.u) * (p.v - a.v)) / d;
    const real w2 = ((b.u - a.u) * (p.v - a.v) - (p.u - a.u) * (b.v - a.v)) / d;
    return {1 - w1 - w2, w1, w2};
}

}  // namespace mesoray
