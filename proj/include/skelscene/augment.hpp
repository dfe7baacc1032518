#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skelscene/ingest.hpp"
#include "skelscene/skeleton.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

// Left/right relabeling; midline joints map to themselves. Involutive.
constexpr Joint mirror_partner(Joint j) noexcept {
    switch (j) {
        case Joint::lhip: return Joint::rhip;
        case Joint::rhip: return Joint::lhip;
        case Joint::lfemur: return Joint::rfemur;
        case Joint::rfemur: return Joint::lfemur;
        case Joint::ltibia: return Joint::rtibia;
        case Joint::rtibia: return Joint::ltibia;
        case Joint::lclavicle: return Joint::rclavicle;
        case Joint::rclavicle: return Joint::lclavicle;
        case Joint::lhumerus: return Joint::rhumerus;
        case Joint::rhumerus: return Joint::lhumerus;
        case Joint::lhand: return Joint::rhand;
        case Joint::rhand: return Joint::lhand;
        default: return j;
    }
}

// Reflects every frame across the yz plane of its own local frame and swaps
// left and right joints. Labels and metadata are kept.
inline SkeletonSequence mirror_sequence(const SkeletonSequence& seq) {
    if (seq.tag() != FrameTag::global) throw Error("mirror_sequence expects a global-frame sequence");
    std::vector<SkeletonFrame> frames;
    frames.reserve(seq.size());
    for (const auto& f : seq.frames()) {
        const LocalFrame lf = build_local_frame(f);
        Pose out;
        for (std::size_t j = 0; j < kJointCount; ++j) {
            Vec3 local = lf.to_local(f.positions()[j]);
            local.x() = -local.x();
            out[index_of(mirror_partner(joint_at(j)))] = lf.to_global(local);
        }
        frames.emplace_back(f.index(), out, FrameTag::global);
    }
    return seq.with_frames(std::move(frames));
}

// "a/b/scene.csv" -> "a/b/scene_mirror.csv"
inline std::string mirrored_path(const std::string& path) {
    const std::filesystem::path p(path);
    std::filesystem::path out = p.parent_path() / (p.stem().string() + "_mirror" + p.extension().string());
    return out.generic_string();
}

// Doubles the manifest: every entry is followed by its mirrored twin. Input
// paths resolve against `base`; mirrored CSVs are written under `out_base`
// at the suffixed relative path.
inline DatasetManifest augment_dataset(const DatasetManifest& m, const std::filesystem::path& base,
                                       const std::filesystem::path& out_base, unsigned workers = 1) {
    DatasetManifest out;
    out.dt = m.dt;
    out.labels = m.labels;
    out.entries.resize(2 * m.entries.size());
    parallel_for(m.entries.size(), workers, [&](std::size_t i) {
        const auto& e = m.entries[i];
        SkeletonSequence mirrored = [&] {
            try {
                return mirror_sequence(load_entry(m, e, base));
            } catch (const Error& ex) {
                throw Error("entry " + e.path + ": " + ex.what());
            }
        }();
        ManifestEntry twin = e;
        twin.path = mirrored_path(e.path);
        write_file_atomic(out_base / twin.path, serialize_sequence_csv(mirrored));
        ManifestEntry original = e;
        // Keep originals reachable from the output manifest's directory.
        if (!std::filesystem::path(e.path).is_absolute() && out_base != base) {
            original.path = std::filesystem::relative(std::filesystem::absolute(base / e.path),
                                                      std::filesystem::absolute(out_base))
                                .generic_string();
        }
        out.entries[2 * i] = std::move(original);
        out.entries[2 * i + 1] = std::move(twin);
    });
    return out;
}

}  // namespace skelscene
