#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "mesoray/error.hpp"
#include "mesoray/math.hpp"
#include "mesoray/shell.hpp"
#include "mesoray/wang.hpp"

namespace mesoray {

/// Linear part shared by every tile placed on one proxy triangle, plus what
/// is needed to turn a tile centre in uv into a translation.
///
/// Tile space maps onto the triangle as
///   x -> +u,  y -> unit face normal,  z -> -zSign * v
/// with both tangent axes scaled by tileUvSize / tileWorldSize through the
/// triangle's uv Jacobian. zSign is the orientation of the uv chart against
/// the winding; flipping z with it keeps the frame a proper (det > 0) map.
struct TriangleTileFrame {
    std::array<Vec3, 3> positions;
    std::array<Vec3, 3> normals;
    std::array<Vec2, 3> uvs;
    Vec3 dPdu, dPdv;  // Jacobian of position w.r.t. uv
    Vec3 faceNormal;
    real zSign = 1;
    real uvPerUnit = 1;  // tileUvSize / tileWorldSize
    Mat3 linear;
    Mat3 inverseLinear;

    /// uv of a tile-space point on the tile whose centre is gUv.
    Vec2 uv_of(const Vec2& gUv, const Vec3& tileLocal) const {
        return gUv + Vec2{tileLocal.x, -zSign * tileLocal.z} * uvPerUnit;
    }
    Vec3 position_at(const Vec2& uv) const {
        return barycentric_interp(barycentric_weights(uv, uvs[0], uvs[1], uvs[2]), positions[0], positions[1],
                                  positions[2]);
    }
    /// Interpolated vertex normal at uv, renormalized. Extrapolates outside
    /// the triangle.
    Vec3 smooth_normal_at(const Vec2& uv) const {
        return normalize(
            barycentric_interp(barycentric_weights(uv, uvs[0], uvs[1], uvs[2]), normals[0], normals[1], normals[2]));
    }
    /// M1 in mesh object space for the tile centred at gUv.
    Affine tile_to_object(const Vec2& gUv) const { return {linear, position_at(gUv)}; }
    Affine object_to_tile(const Vec2& gUv) const {
        return {inverseLinear, -(inverseLinear * position_at(gUv))};
    }
};

inline TriangleTileFrame make_tile_frame(const std::array<Vec3, 3>& p, const std::array<Vec3, 3>& n,
                                         const std::array<Vec2, 3>& uv, real tileUvSize, real tileWorldSize) {
    TriangleTileFrame f;
    f.positions = p;
    f.normals = n;
    f.uvs = uv;
    const Vec2 du1 = uv[1] - uv[0], du2 = uv[2] - uv[0];
    const real det = du1.u * du2.v - du2.u * du1.v;
    if (std::abs(det) < 1e-18) throw DegenerateError("zero-area uv triangle");
    const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0];
    // [e1 e2] = J [du1 du2]  =>  J = [e1 e2] [du1 du2]^-1
    f.dPdu = (e1 * du2.v - e2 * du1.v) / det;
    f.dPdv = (e2 * du1.u - e1 * du2.u) / det;
    const Vec3 nRaw = cross(e1, e2);
    if (length(nRaw) < 1e-12) throw DegenerateError("zero-area proxy triangle");
    f.faceNormal = normalize(nRaw);
    f.zSign = dot(cross(f.dPdu, f.dPdv), f.faceNormal) >= 0 ? 1.0 : -1.0;
    f.uvPerUnit = tileUvSize / tileWorldSize;
    f.linear = Mat3::from_columns(f.dPdu * f.uvPerUnit, f.faceNormal, f.dPdv * (-f.zSign * f.uvPerUnit));
    f.inverseLinear = inverse(f.linear);
    return f;
}

inline TriangleTileFrame make_tile_frame(const ProxyMesh& mesh, std::size_t tri, real tileUvSize,
                                         real tileWorldSize) {
    return make_tile_frame(mesh.positions(tri), mesh.normals(tri), mesh.uvs(tri), tileUvSize, tileWorldSize);
}

/// World-space tile transform M1 for the tile centred at gUv on triangle
/// `tri` of a mesh instance.
inline Affine tile_frame_transform_shell(const ProxyMesh& mesh, std::size_t tri, const MeshInstance& instance,
                                         const Vec2& gUv, real tileWorldSize, real tileUvSize) {
    return instance.worldTransform * make_tile_frame(mesh, tri, tileUvSize, tileWorldSize).tile_to_object(gUv);
}

/// Core tile transform: the cube sits at the box centre, axis-aligned in the
/// mesh's object space.
inline Affine tile_frame_transform_core(const MeshInstance& instance, const Vec3& boxCenter) {
    return instance.worldTransform * Affine::translate(boxCenter);
}

/// Tile-local rotation that carries the tile's up axis onto `smoothNormal`
/// (given in the same space as the frame's output).
inline Mat3 smooth_alignment(const Mat3& tileLinearInverse, const Vec3& smoothNormal) {
    return rotation_between({0, 1, 0}, normalize(tileLinearInverse * smoothNormal));
}

/// W = M1 . T(localPosition) . [align] . R(jitter) . R(instance).
inline Affine instance_transform(const Affine& m1, const MoleculeInstance& inst, const Quat& jitter,
                                 const std::optional<Mat3>& alignment = std::nullopt) {
    Mat3 rot = inst.rotation.to_matrix();
    if (!(jitter == Quat{})) rot = jitter.to_matrix() * rot;
    if (alignment) rot = *alignment * rot;
    return {m1.linear * rot, m1.point(inst.localPosition)};
}

/// Same as above with the instance frame taken from the interpolated vertex
/// normal at the instance's uv position rather than the flat face normal.
inline Affine instance_transform_smooth(const TriangleTileFrame& frame, const Affine& m1, const Vec2& gUv,
                                        const MoleculeInstance& inst, const Quat& jitter) {
    const Vec3 n = frame.smooth_normal_at(frame.uv_of(gUv, inst.localPosition));
    return instance_transform(m1, inst, jitter, smooth_alignment(frame.inverseLinear, n));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline real unit_from_bits(std::uint64_t h) { return static_cast<real>(h >> 11) * 0x1.0p-53; }

}  // namespace detail

inline constexpr real kJitterFrequency = 1.0;  // Hz

/// Small deterministic wobble per (mesh instance, tile cell, instance): the
/// axis and phase come from a hash, the angle is amplitude * sin(2 pi f t +
/// phase). Zero amplitude gives the identity exactly.
inline Quat jitter_rotation(int meshInstanceId, std::array<int, 3> tileCell, int instanceIndex, real time,
                            real amplitude) {
    if (amplitude == 0) return {};
    std::uint64_t h = detail::splitmix64(static_cast<std::uint64_t>(meshInstanceId));
    for (int c : tileCell) h = detail::splitmix64(h ^ static_cast<std::uint32_t>(c));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(instanceIndex));
    const real zc = 2 * detail::unit_from_bits(h) - 1;
    const real phi = 2 * kPi * detail::unit_from_bits(detail::splitmix64(h + 1));
    const real phase = 2 * kPi * detail::unit_from_bits(detail::splitmix64(h + 2));
    const real rxy = std::sqrt(std::max(0.0, 1 - zc * zc));
    const Vec3 axis{rxy * std::cos(phi), rxy * std::sin(phi), zc};
    const real angle = amplitude * std::sin(2 * kPi * kJitterFrequency * std::fmod(time, 1.0 / kJitterFrequency) + phase);
    if (angle == 0) return {};
    return Quat::axis_angle(axis, angle);
}

/// Visible half-space is normal . p - offset >= 0.
struct ClipPlane {
    Vec3 normal{0, 0, 1};
    real offset = 0;
    bool enabled = false;

    bool visible(const Vec3& p) const { return dot(normal, p) - offset >= 0; }
};

/// True when every point is on the invisible side.
inline bool clip_reject(std::span<const Vec3> points, const ClipPlane& plane) {
    if (!plane.enabled) return false;
    for (const Vec3& p : points)
        if (plane.visible(p)) return false;
    return true;
}

}  // namespace mesoray
