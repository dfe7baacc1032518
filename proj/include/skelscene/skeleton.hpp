#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "skelscene/errors.hpp"

namespace skelscene {

using Vec3 = Eigen::Vector3d;

// ------------------------------------------------------------------ joints
//
// Canonical 15-joint body model. Head joints are not part of the model.
enum class Joint : std::uint8_t {
    root = 0,
    lhip,
    rhip,
    lfemur,
    ltibia,
    rfemur,
    rtibia,
    spine,
    throat,
    lclavicle,
    lhumerus,
    lhand,
    rclavicle,
    rhumerus,
    rhand,
};

inline constexpr std::size_t kJointCount = 15;

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "root",  "lhip",   "rhip",      "lfemur",   "ltibia", "rfemur",    "rtibia",   "spine",
    "throat", "lclavicle", "lhumerus", "lhand", "rclavicle", "rhumerus", "rhand",
};

constexpr std::size_t index_of(Joint j) noexcept { return static_cast<std::size_t>(j); }

constexpr Joint joint_at(std::size_t i) noexcept { return static_cast<Joint>(i); }

constexpr std::string_view joint_name(Joint j) noexcept { return kJointNames[index_of(j)]; }

constexpr std::optional<Joint> joint_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kJointCount; ++i) {
        if (kJointNames[i] == name) return joint_at(i);
    }
    return std::nullopt;
}

inline constexpr std::array<Joint, kJointCount> all_joints() noexcept {
    std::array<Joint, kJointCount> out{};
    for (std::size_t i = 0; i < kJointCount; ++i) out[i] = joint_at(i);
    return out;
}

// ------------------------------------------------------------------ frames
//
enum class FrameTag : std::uint8_t { global, local };

using Pose = std::array<Vec3, kJointCount>;

class SkeletonFrame {
public:
    SkeletonFrame(std::size_t index, const Pose& positions, FrameTag tag = FrameTag::global)
        : index_(index), positions_(positions), tag_(tag) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            if (!positions_[j].allFinite()) {
                throw Error("frame " + std::to_string(index) + ": non-finite coordinate for joint " +
                            std::string(kJointNames[j]));
            }
        }
    }

    std::size_t index() const noexcept { return index_; }
    FrameTag tag() const noexcept { return tag_; }
    const Pose& positions() const noexcept { return positions_; }
    const Vec3& operator[](Joint j) const noexcept { return positions_[index_of(j)]; }

private:
    std::size_t index_;
    Pose positions_;
    FrameTag tag_;
};

// Ordered frames sampled every dt seconds. Frame indices run 0, 1, 2, ...
// Operations that differentiate (speed, acceleration) check their own
// minimum length and raise SequenceTooShort.
class SkeletonSequence {
public:
    SkeletonSequence(std::vector<SkeletonFrame> frames, double dt, std::string subject = {},
                     std::optional<std::string> label = std::nullopt)
        : frames_(std::move(frames)), dt_(dt), subject_(std::move(subject)), label_(std::move(label)) {
        if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw Error("sampling interval must be positive");
        if (frames_.empty()) throw SequenceTooShort("sequence has no frames");
        const FrameTag tag = frames_.front().tag();
        for (std::size_t i = 0; i < frames_.size(); ++i) {
            if (frames_[i].index() != frames_.front().index() + i) {
                throw Error("frame indices must increase by 1 (at position " + std::to_string(i) + ")");
            }
            if (frames_[i].tag() != tag) throw Error("mixed coordinate frames in one sequence");
        }
    }

    std::size_t size() const noexcept { return frames_.size(); }
    double dt() const noexcept { return dt_; }
    FrameTag tag() const noexcept { return frames_.front().tag(); }
    const std::string& subject() const noexcept { return subject_; }
    const std::optional<std::string>& label() const noexcept { return label_; }
    const std::vector<SkeletonFrame>& frames() const noexcept { return frames_; }
    const SkeletonFrame& operator[](std::size_t i) const { return frames_[i]; }

    const Vec3& position(std::size_t frame, Joint j) const { return frames_[frame][j]; }

    // Copy with the positions replaced, keeping metadata.
    SkeletonSequence with_frames(std::vector<SkeletonFrame> frames) const {
        return SkeletonSequence(std::move(frames), dt_, subject_, label_);
    }

    SkeletonSequence with_label(std::optional<std::string> label) const {
        return SkeletonSequence(frames_, dt_, subject_, std::move(label));
    }

private:
    std::vector<SkeletonFrame> frames_;
    double dt_;
    std::string subject_;
    std::optional<std::string> label_;
};

// ------------------------------------------------------------------ local frame
//
// Body-anchored frame: origin on the hip line, +x toward the left hip, +y
// toward the spine, z = x cross y.
class LocalFrame {
public:
    static constexpr double kTolerance = 1e-9;

    LocalFrame(const Vec3& origin, const Vec3& x, const Vec3& y, const Vec3& z) : origin_(origin) {
        axes_.col(0) = x;
        axes_.col(1) = y;
        axes_.col(2) = z;
        const Eigen::Matrix3d gram = axes_.transpose() * axes_;
        if (!((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= kTolerance) ||
            std::abs(axes_.determinant() - 1.0) > kTolerance) {
            throw DegenerateFrame("axes are not orthonormal and right-handed");
        }
    }

    const Vec3& origin() const noexcept { return origin_; }
    Vec3 x() const { return axes_.col(0); }
    Vec3 y() const { return axes_.col(1); }
    Vec3 z() const { return axes_.col(2); }
    // Columns are the axes expressed in global coordinates.
    const Eigen::Matrix3d& axes() const noexcept { return axes_; }

    Vec3 to_local(const Vec3& global) const { return axes_.transpose() * (global - origin_); }
    Vec3 to_global(const Vec3& local) const { return origin_ + axes_ * local; }

private:
    Vec3 origin_;
    Eigen::Matrix3d axes_;
};

inline LocalFrame build_local_frame(const Vec3& lhip, const Vec3& rhip, const Vec3& spine) {
    const Vec3 hip_line = lhip - rhip;
    const double hip_len = hip_line.norm();
    if (hip_len <= LocalFrame::kTolerance) throw DegenerateFrame("left and right hip coincide");
    const Vec3 x = hip_line / hip_len;
    // Foot of the perpendicular from the spine onto the hip line.
    const Vec3 origin = rhip + (spine - rhip).dot(x) * x;
    Vec3 up = spine - origin;
    up -= up.dot(x) * x;
    const double up_len = up.norm();
    if (up_len <= LocalFrame::kTolerance) throw DegenerateFrame("spine lies on the hip line");
    const Vec3 y = up / up_len;
    return LocalFrame(origin, x, y, x.cross(y));
}

inline LocalFrame build_local_frame(const SkeletonFrame& frame) {
    if (frame.tag() != FrameTag::global) throw Error("local frame must be built from global coordinates");
    try {
        return build_local_frame(frame[Joint::lhip], frame[Joint::rhip], frame[Joint::spine]);
    } catch (const DegenerateFrame& e) {
        throw DegenerateFrame(e.reason(), frame.index());
    }
}

inline std::vector<LocalFrame> local_frames(const SkeletonSequence& seq) {
    std::vector<LocalFrame> out;
    out.reserve(seq.size());
    for (const auto& f : seq.frames()) out.push_back(build_local_frame(f));
    return out;
}

// Expresses every frame in its own local frame.
inline SkeletonSequence to_local(const SkeletonSequence& seq) {
    if (seq.tag() != FrameTag::global) throw Error("to_local expects a global-frame sequence");
    std::vector<SkeletonFrame> frames;
    frames.reserve(seq.size());
    for (const auto& f : seq.frames()) {
        const LocalFrame lf = build_local_frame(f);
        Pose p;
        for (std::size_t j = 0; j < kJointCount; ++j) p[j] = lf.to_local(f.positions()[j]);
        frames.emplace_back(f.index(), p, FrameTag::local);
    }
    return seq.with_frames(std::move(frames));
}

// Inverse of to_local given the frames it used.
inline SkeletonSequence to_global(const SkeletonSequence& local, std::span<const LocalFrame> frames) {
    if (local.tag() != FrameTag::local) throw Error("to_global expects a local-frame sequence");
    if (frames.size() != local.size()) throw LengthMismatch("one local frame per skeleton frame required");
    std::vector<SkeletonFrame> out;
    out.reserve(local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
        Pose p;
        for (std::size_t j = 0; j < kJointCount; ++j) p[j] = frames[i].to_global(local[i].positions()[j]);
        out.emplace_back(local[i].index(), p, FrameTag::global);
    }
    return local.with_frames(std::move(out));
}

// ------------------------------------------------------------------ body parts
//
struct BodyPart {
    int number;  // 1..7
    std::string_view name;
    Joint pivot;
    std::array<Joint, 2> ends;
};

inline constexpr std::size_t kPartCount = 7;

inline constexpr std::array<BodyPart, kPartCount> kPartTable = {{
    {1, "lower_torso", Joint::root, {Joint::lhip, Joint::rhip}},
    {2, "spine", Joint::root, {Joint::spine, Joint::throat}},
    {3, "upper_torso", Joint::throat, {Joint::lclavicle, Joint::rclavicle}},
    {4, "left_arm", Joint::lclavicle, {Joint::lhumerus, Joint::lhand}},
    {5, "right_arm", Joint::rclavicle, {Joint::rhumerus, Joint::rhand}},
    {6, "left_leg", Joint::lhip, {Joint::lfemur, Joint::ltibia}},
    {7, "right_leg", Joint::rhip, {Joint::rfemur, Joint::rtibia}},
}};

constexpr const std::array<BodyPart, kPartCount>& part_table() noexcept { return kPartTable; }

constexpr std::optional<BodyPart> part_from_name(std::string_view name) noexcept {
    for (const auto& p : kPartTable) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

}  // namespace skelscene
