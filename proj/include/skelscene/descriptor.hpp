#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelscene/errors.hpp"
#include "skelscene/partition.hpp"
#include "skelscene/skeleton.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

// ------------------------------------------------------------------ trajectories

inline constexpr std::size_t kIntermediatePoints = 5;
inline constexpr std::size_t kTrajectoryPoints = kIntermediatePoints + 2;
inline constexpr std::size_t kDescriptorWidth = 3 * kTrajectoryPoints;  // 21
inline constexpr std::size_t kGlobalBlockWidth = 2 * kDescriptorWidth;  // 42
inline constexpr std::size_t kLocalBlockWidth = 4 * kDescriptorWidth;   // 84

// Start point, five evenly spaced intermediate points and end point of one
// joint over one primitive action, each relative to a reference (the global
// origin when `reference` is empty).
struct TrajectoryDescriptor {
    Joint joint = Joint::root;
    std::optional<Joint> reference;
    std::array<Vec3, kTrajectoryPoints> points{};

    const Vec3& start() const noexcept { return points.front(); }
    const Vec3& end() const noexcept { return points.back(); }

    void append_to(std::vector<double>& out) const {
        for (const auto& p : points) out.insert(out.end(), {p.x(), p.y(), p.z()});
    }
};

// Frame offsets of the seven samples over an interval of `len` frames:
// 0, round(k (len-1) / 6) for k = 1..5, len-1 (halves round up).
inline std::array<std::size_t, kTrajectoryPoints> trajectory_sample_offsets(std::size_t len) {
    std::array<std::size_t, kTrajectoryPoints> out{};
    const std::size_t span = len - 1;
    constexpr std::size_t parts = kIntermediatePoints + 1;
    for (std::size_t k = 0; k < kTrajectoryPoints; ++k) out[k] = (2 * k * span + parts) / (2 * parts);
    return out;
}

inline TrajectoryDescriptor sample_trajectory(const SkeletonSequence& seq, Joint joint, const FrameInterval& interval,
                                              std::optional<Joint> reference) {
    if (interval.end < interval.start || interval.length() < 2) {
        throw IntervalTooShort("trajectory interval needs at least two frames");
    }
    if (interval.end >= seq.size()) throw std::out_of_range("trajectory interval exceeds sequence");
    TrajectoryDescriptor out{joint, reference, {}};
    const auto offsets = trajectory_sample_offsets(interval.length());
    for (std::size_t k = 0; k < kTrajectoryPoints; ++k) {
        const std::size_t f = interval.start + offsets[k];
        out.points[k] = seq.position(f, joint);
        if (reference) out.points[k] -= seq.position(f, *reference);
    }
    return out;
}

// Hip trajectories relative to the global origin.
inline std::array<TrajectoryDescriptor, 2> global_descriptor(const SkeletonSequence& global,
                                                             const PrimitiveAction& pa) {
    if (global.tag() != FrameTag::global) throw Error("global descriptor needs a global-frame sequence");
    if (pa.stream != kGlobalStream) throw std::invalid_argument("primitive action is not on the global stream");
    return {sample_trajectory(global, Joint::lhip, pa.interval, std::nullopt),
            sample_trajectory(global, Joint::rhip, pa.interval, std::nullopt)};
}

// Chain-relative trajectories: first end joint against the pivot, second end
// joint against the first.
inline std::array<TrajectoryDescriptor, 2> local_descriptor(const SkeletonSequence& local, const BodyPart& part,
                                                            const PrimitiveAction& pa) {
    if (local.tag() != FrameTag::local) throw Error("local descriptor needs a local-frame sequence");
    if (pa.stream != static_cast<std::size_t>(part.number)) {
        throw std::invalid_argument("primitive action belongs to another stream");
    }
    return {sample_trajectory(local, part.ends[0], pa.interval, part.pivot),
            sample_trajectory(local, part.ends[1], pa.interval, part.ends[0])};
}

// Adds each end joint's trajectory relative to the root, tying the part to
// the rest of the body.
inline std::array<TrajectoryDescriptor, 4> extend_local_features(const std::array<TrajectoryDescriptor, 2>& chain,
                                                                 const SkeletonSequence& local, const BodyPart& part,
                                                                 const PrimitiveAction& pa) {
    return {chain[0], chain[1], sample_trajectory(local, part.ends[0], pa.interval, Joint::root),
            sample_trajectory(local, part.ends[1], pa.interval, Joint::root)};
}

// Divides every consecutive 3-vector by its norm; zero vectors stay zero.
inline void normalize_features(std::span<double> values) {
    if (values.size() % 3 != 0) throw std::invalid_argument("feature length must be a multiple of 3");
    for (std::size_t i = 0; i < values.size(); i += 3) {
        const double n = std::sqrt(values[i] * values[i] + values[i + 1] * values[i + 1] + values[i + 2] * values[i + 2]);
        if (n > 0.0) {
            values[i] /= n;
            values[i + 1] /= n;
            values[i + 2] /= n;
        }
    }
}

inline Vec3 normalized(const Vec3& v) {
    const double n = v.norm();
    return n > 0.0 ? Vec3(v / n) : Vec3::Zero();
}

// ------------------------------------------------------------------ scene matrix

struct RowMeta {
    std::size_t stream = 0;
    std::size_t ordinal = 0;
    bool occupied = false;
    FrameInterval interval;
    double score = 0.0;
};

// Descriptor block of one primitive action, before padding.
struct FeatureBlock {
    PrimitiveAction pa;
    std::vector<double> values;
};

// (streams * max_pa) x width matrix, stream-major: row = stream * max_pa + ordinal.
class SceneFeatureMatrix {
public:
    SceneFeatureMatrix(std::size_t max_pa, std::size_t width, std::optional<std::string> label = std::nullopt)
        : max_pa_(max_pa),
          width_(width),
          data_(kStreamCount * max_pa * width, 0.0),
          meta_(kStreamCount * max_pa),
          label_(std::move(label)) {
        for (std::size_t s = 0; s < kStreamCount; ++s) {
            for (std::size_t q = 0; q < max_pa; ++q) {
                meta_[s * max_pa + q].stream = s;
                meta_[s * max_pa + q].ordinal = q;
            }
        }
    }

    std::size_t rows() const noexcept { return kStreamCount * max_pa_; }
    std::size_t cols() const noexcept { return width_; }
    std::size_t max_pa() const noexcept { return max_pa_; }
    const std::optional<std::string>& label() const noexcept { return label_; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const { return std::span(data_).subspan(r * width_, width_); }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
    const std::vector<RowMeta>& meta() const noexcept { return meta_; }

    std::size_t occupied_rows() const {
        std::size_t n = 0;
        for (const auto& m : meta_) n += m.occupied ? 1 : 0;
        return n;
    }

    void set_row(const FeatureBlock& block) {
        if (block.values.size() > width_) {
            throw WidthOverflow("descriptor block of " + std::to_string(block.values.size()) +
                                " values exceeds width " + std::to_string(width_));
        }
        if (block.pa.stream >= kStreamCount || block.pa.ordinal >= max_pa_) {
            throw std::out_of_range("primitive action outside the matrix layout");
        }
        const std::size_t r = block.pa.stream * max_pa_ + block.pa.ordinal;
        std::copy(block.values.begin(), block.values.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * width_));
        meta_[r] = {block.pa.stream, block.pa.ordinal, true, block.pa.interval, block.pa.score};
    }

private:
    std::size_t max_pa_;
    std::size_t width_;
    std::vector<double> data_;
    std::vector<RowMeta> meta_;
    std::optional<std::string> label_;
};

inline SceneFeatureMatrix assemble_scene_matrix(const std::array<std::vector<FeatureBlock>, kStreamCount>& blocks,
                                                std::size_t max_pa, std::size_t width,
                                                std::optional<std::string> label = std::nullopt) {
    SceneFeatureMatrix m(max_pa, width, std::move(label));
    for (std::size_t s = 0; s < kStreamCount; ++s) {
        for (const auto& b : blocks[s]) {
            if (b.pa.stream != s) throw std::invalid_argument("feature block filed under the wrong stream");
            m.set_row(b);
        }
    }
    return m;
}

// ------------------------------------------------------------------ pipeline

struct FeatureConfig {
    PartitionConfig partition;
    std::size_t width = 126;
};

inline std::string speed_frame_name(SpeedFrame f) {
    switch (f) {
        case SpeedFrame::mixed: return "mixed";
        case SpeedFrame::all_global: return "global";
        case SpeedFrame::all_local: return "local";
    }
    return "mixed";
}

inline SpeedFrame speed_frame_from_name(const std::string& s) {
    if (s == "mixed") return SpeedFrame::mixed;
    if (s == "global") return SpeedFrame::all_global;
    if (s == "local") return SpeedFrame::all_local;
    throw ConfigError("unknown speed frame '" + s + "' (expected mixed, global or local)");
}

inline nlohmann::json to_json(const FeatureConfig& c) {
    return {
        {"vtau_fraction", c.partition.threshold.fraction},
        {"vtau_floor", c.partition.threshold.floor},
        {"gap", c.partition.gap},
        {"min_run", c.partition.min_run},
        {"max_pa", c.partition.max_pa},
        {"speed_frame", speed_frame_name(c.partition.frame)},
        {"width", c.width},
    };
}

// Fingerprint of everything that shapes a feature matrix.
inline std::string feature_hash(const FeatureConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

inline SceneFeatureMatrix featurize_scene(const SkeletonSequence& global, const SceneSegmentation& seg,
                                          const FeatureConfig& cfg) {
    std::array<std::vector<FeatureBlock>, kStreamCount> blocks;
    for (const auto& pa : seg.streams[kGlobalStream]) {
        FeatureBlock b{pa, {}};
        for (const auto& d : global_descriptor(global, pa)) d.append_to(b.values);
        normalize_features(b.values);
        blocks[kGlobalStream].push_back(std::move(b));
    }
    for (const auto& part : part_table()) {
        const auto s = static_cast<std::size_t>(part.number);
        for (const auto& pa : seg.streams[s]) {
            FeatureBlock b{pa, {}};
            const auto chain = local_descriptor(seg.local, part, pa);
            for (const auto& d : extend_local_features(chain, seg.local, part, pa)) d.append_to(b.values);
            normalize_features(b.values);
            blocks[s].push_back(std::move(b));
        }
    }
    return assemble_scene_matrix(blocks, cfg.partition.max_pa, cfg.width, global.label());
}

inline SceneFeatureMatrix featurize_scene(const SkeletonSequence& global, const FeatureConfig& cfg) {
    return featurize_scene(global, segment_scene(global, cfg.partition), cfg);
}

// ------------------------------------------------------------------ SFM files
//
// 16-byte header: "SFM1", rows u32, cols u32, label u32 (little endian),
// then rows*cols little-endian float32 values, row-major.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(std::string_view in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace detail

struct SfmFile {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t label = 0;
    std::vector<double> values;  // widened from float32
};

inline std::string encode_sfm(const SceneFeatureMatrix& m, std::uint32_t label) {
    std::string out = "SFM1";
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
    detail::put_u32(out, label);
    out.reserve(16 + 4 * m.data().size());
    for (double v : m.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

inline SfmFile decode_sfm(std::string_view bytes) {
    if (bytes.size() < 16 || bytes.substr(0, 4) != "SFM1") throw Error("not a scene feature matrix file");
    SfmFile f;
    f.rows = detail::get_u32(bytes, 4);
    f.cols = detail::get_u32(bytes, 8);
    f.label = detail::get_u32(bytes, 12);
    const std::size_t n = static_cast<std::size_t>(f.rows) * f.cols;
    if (bytes.size() != 16 + 4 * n) throw Error("feature matrix payload has the wrong size");
    f.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.values[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(bytes, 16 + 4 * i)));
    }
    return f;
}

// Sidecar row metadata: row,stream,q,occupied,start,end,score
inline std::string encode_row_meta(const SceneFeatureMatrix& m) {
    std::ostringstream out;
    out << "row,stream,q,occupied,start,end,score\n";
    out.precision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto& meta = m.meta()[r];
        out << r << ',' << stream_name(meta.stream) << ',' << meta.ordinal << ',' << (meta.occupied ? 1 : 0) << ',';
        if (meta.occupied) {
            out << meta.interval.start << ',' << meta.interval.end << ',' << meta.score;
        } else {
            out << ",,";
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace skelscene
