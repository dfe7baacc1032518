#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "skelscene/skelscene.hpp"

namespace testing_support {

using namespace skelscene;

inline Vec3 random_vec(Rng& rng, double lo = -1.0, double hi = 1.0) {
    return Vec3(uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi));
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    q.normalize();
    return q.toRotationMatrix();
}

// Rest pose plus a random perturbation per joint; hips stay well apart.
inline Pose random_pose(Rng& rng, double jitter = 0.1) {
    Pose p = rest_pose();
    for (auto& v : p) v += random_vec(rng, -jitter, jitter);
    return p;
}

// Random walk of poses under a random rigid placement.
inline SkeletonSequence random_sequence(Rng& rng, std::size_t frames, double dt = 0.02) {
    const Eigen::Matrix3d r = random_rotation(rng);
    const Vec3 t = random_vec(rng, -2.0, 2.0);
    Pose p = random_pose(rng);
    std::vector<SkeletonFrame> out;
    for (std::size_t f = 0; f < frames; ++f) {
        for (auto& v : p) v += random_vec(rng, -0.01, 0.01);
        Pose g;
        for (std::size_t j = 0; j < kJointCount; ++j) g[j] = r * p[j] + t;
        out.emplace_back(f, g, FrameTag::global);
    }
    return SkeletonSequence(std::move(out), dt, "S1", "random");
}

inline SkeletonSequence constant_sequence(const Pose& p, std::size_t frames, double dt = 0.02) {
    std::vector<SkeletonFrame> out;
    for (std::size_t f = 0; f < frames; ++f) out.emplace_back(f, p, FrameTag::global);
    return SkeletonSequence(std::move(out), dt, "S1");
}

// One scripted segment on one part, no noise, no jitter.
inline SyntheticClassSpec single_part_spec(int part, std::size_t segments, std::size_t duration = 30,
                                           std::size_t rest = 30, double amplitude = 1.0,
                                           const std::string& plane = "+y+z") {
    SyntheticClassSpec s;
    s.name = "scripted";
    PartScript ps;
    ps.part = part;
    ps.lead = 10;
    for (std::size_t i = 0; i < segments; ++i) ps.segments.push_back({duration, amplitude, rest, plane});
    s.scripts.push_back(ps);
    return s;
}

}  // namespace testing_support
