#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelscene/errors.hpp"
#include "skelscene/skeleton.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

// ------------------------------------------------------------------ sequence CSV
//
// Header: frame,<joint>_x,<joint>_y,<joint>_z for all 15 joints (any column
// order), one row per frame, frame numbers 0, 1, 2, ...

inline constexpr double kDefaultDt = 0.02;  // 50 fps

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline SkeletonSequence parse_sequence_csv(std::istream& in, double dt = kDefaultDt, std::string subject = {},
                                           std::optional<std::string> label = std::nullopt) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw SchemaError("empty sequence file: missing header");
    ++line_no;
    // Owned copies; `line` is reused for the data rows.
    std::vector<std::string> header;
    for (const auto cell : detail::split_csv_line(detail::trim(line))) header.emplace_back(detail::trim(cell));

    // column -> (joint, axis); frame column marked with axis 3.
    std::vector<std::pair<std::size_t, std::size_t>> columns(header.size());
    std::optional<std::size_t> frame_col;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string_view name = header[c];
        if (name == "frame") {
            if (frame_col) throw SchemaError("duplicate column 'frame'");
            frame_col = c;
            columns[c] = {0, 3};
            continue;
        }
        const std::size_t us = name.rfind('_');
        const std::string_view axis = us == std::string_view::npos ? std::string_view{} : name.substr(us + 1);
        const auto joint = us == std::string_view::npos ? std::nullopt : joint_from_name(name.substr(0, us));
        if (!joint || axis.size() != 1 || axis[0] < 'x' || axis[0] > 'z') {
            throw SchemaError("unknown column '" + std::string(name) + "'");
        }
        const std::pair<std::size_t, std::size_t> key{index_of(*joint), static_cast<std::size_t>(axis[0] - 'x')};
        if (!seen.insert(key).second) throw SchemaError("duplicate column '" + std::string(name) + "'");
        columns[c] = key;
    }
    if (!frame_col) throw SchemaError("missing column 'frame'");
    for (std::size_t j = 0; j < kJointCount; ++j) {
        for (std::size_t a = 0; a < 3; ++a) {
            if (!seen.contains({j, a})) {
                throw SchemaError("missing column '" + std::string(kJointNames[j]) + "_" + char('x' + a) + "'");
            }
        }
    }

    std::vector<SkeletonFrame> frames;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        const auto cells = detail::split_csv_line(row);
        if (cells.size() != header.size()) {
            throw ParseError(line_no, std::min(cells.size(), header.size()) + 1,
                             "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(cells.size()));
        }
        Pose pose;
        std::size_t frame_no = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string_view cell = detail::trim(cells[c]);
            const std::string& col_name = header[c];
            if (c == *frame_col) {
                const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), frame_no);
                if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                    throw ParseError(line_no, c + 1, "bad frame number '" + std::string(cell) + "'");
                }
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw ParseError(line_no, c + 1, "bad number '" + std::string(cell) + "' in " + col_name);
            }
            if (!std::isfinite(v)) {
                throw ParseError(line_no, c + 1, "non-finite value '" + std::string(cell) + "' in " + col_name);
            }
            pose[columns[c].first][static_cast<Eigen::Index>(columns[c].second)] = v;
        }
        if (frame_no != frames.size()) {
            throw ParseError(line_no, *frame_col + 1,
                             "frame numbers must be consecutive from 0 (expected " + std::to_string(frames.size()) +
                                 ", found " + std::to_string(frame_no) + ")");
        }
        frames.emplace_back(frame_no, pose, FrameTag::global);
    }
    if (frames.empty()) throw SchemaError("sequence file has no frames");
    return SkeletonSequence(std::move(frames), dt, std::move(subject), std::move(label));
}

inline SkeletonSequence parse_sequence_csv(std::string_view text, double dt = kDefaultDt, std::string subject = {},
                                           std::optional<std::string> label = std::nullopt) {
    std::istringstream in{std::string(text)};
    return parse_sequence_csv(in, dt, std::move(subject), std::move(label));
}

inline std::string sequence_csv_header() {
    std::string out = "frame";
    for (auto name : kJointNames) {
        for (char axis : {'x', 'y', 'z'}) {
            out += ',';
            out += name;
            out += '_';
            out += axis;
        }
    }
    return out;
}

// Canonical form: canonical column order, shortest round-trip decimals.
inline std::string serialize_sequence_csv(const SkeletonSequence& seq) {
    std::string out = sequence_csv_header();
    out += '\n';
    for (std::size_t f = 0; f < seq.size(); ++f) {
        out += std::to_string(f);
        for (const auto& p : seq[f].positions()) {
            for (int a = 0; a < 3; ++a) {
                out += ',';
                out += detail::format_double(p[a]);
            }
        }
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------------------ manifest

struct ManifestEntry {
    std::string path;
    std::string subject;
    std::string label;
    std::optional<double> dt;  // per-file override

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    double dt = kDefaultDt;
    std::vector<std::string> labels;
    std::vector<ManifestEntry> entries;

    double entry_dt(const ManifestEntry& e) const { return e.dt.value_or(dt); }

    std::size_t label_index(const std::string& label) const {
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw LabelOutOfRange("label '" + label + "' is not in the vocabulary");
        return static_cast<std::size_t>(it - labels.begin());
    }

    void validate() const {
        if (!(dt > 0.0)) throw SchemaError("manifest dt must be positive");
        std::set<std::string> vocab;
        for (const auto& l : labels) {
            if (!vocab.insert(l).second) throw SchemaError("duplicate label '" + l + "' in vocabulary");
        }
        for (const auto& e : entries) {
            if (!vocab.contains(e.label)) throw SchemaError("entry " + e.path + ": label '" + e.label + "' not in vocabulary");
            if (e.subject.empty()) throw SchemaError("entry " + e.path + ": empty subject id");
            if (e.dt && !(*e.dt > 0.0)) throw SchemaError("entry " + e.path + ": dt must be positive");
        }
    }

    std::vector<std::string> subjects() const {
        std::vector<std::string> out;
        for (const auto& e : entries) {
            if (std::find(out.begin(), out.end(), e.subject) == out.end()) out.push_back(e.subject);
        }
        return out;
    }
};

inline nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json j = {{"path", e.path}, {"subject", e.subject}, {"label", e.label}};
        if (e.dt) j["dt"] = *e.dt;
        entries.push_back(std::move(j));
    }
    return {{"dt", m.dt}, {"labels", m.labels}, {"entries", std::move(entries)}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.dt = j.value("dt", kDefaultDt);
        m.labels = j.at("labels").get<std::vector<std::string>>();
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry{e.at("path").get<std::string>(), e.at("subject").get<std::string>(),
                                e.at("label").get<std::string>(), std::nullopt};
            if (e.contains("dt")) entry.dt = e.at("dt").get<double>();
            m.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("malformed manifest: ") + ex.what());
    }
    m.validate();
    return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
    try {
        return manifest_from_json(j);
    } catch (const SchemaError& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(m).dump(2) + "\n");
}

// Loads one entry; relative paths resolve against `base`.
inline SkeletonSequence load_entry(const DatasetManifest& m, const ManifestEntry& e, const std::filesystem::path& base) {
    const std::filesystem::path p = std::filesystem::path(e.path).is_absolute() ? std::filesystem::path(e.path) : base / e.path;
    std::istringstream in(read_file(p));
    try {
        return parse_sequence_csv(in, m.entry_dt(e), e.subject, e.label);
    } catch (const Error& ex) {
        throw Error(p.string() + ": " + ex.what());
    }
}

// ------------------------------------------------------------------ splits

struct SplitSpec {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

struct SplitManifests {
    DatasetManifest train;
    DatasetManifest validation;
    DatasetManifest test;
};

inline SplitManifests split_dataset(const DatasetManifest& m, const SplitSpec& spec) {
    std::map<std::string, int> owner;
    const std::vector<std::string>* sets[] = {&spec.train, &spec.validation, &spec.test};
    for (int s = 0; s < 3; ++s) {
        for (const auto& subject : *sets[s]) {
            const auto [it, fresh] = owner.emplace(subject, s);
            if (!fresh) throw SplitError("subject '" + subject + "' assigned to more than one split");
        }
    }
    SplitManifests out;
    for (auto* part : {&out.train, &out.validation, &out.test}) {
        part->dt = m.dt;
        part->labels = m.labels;
    }
    DatasetManifest* targets[] = {&out.train, &out.validation, &out.test};
    for (const auto& e : m.entries) {
        const auto it = owner.find(e.subject);
        if (it == owner.end()) throw SplitError("subject '" + e.subject + "' is not assigned to any split");
        targets[it->second]->entries.push_back(e);
    }
    return out;
}

// ------------------------------------------------------------------ synthetic scenes
//
// Scripted stand-in for motion-capture data. Each part follows a script of
// motion segments separated by rests. Limb segments trace a closed loop with
// a bell-shaped speed profile (zero at both ends, peak = amplitude); segments
// of the lower torso translate the whole body.

struct SyntheticSegment {
    std::size_t duration = 30;  // frames
    double amplitude = 1.0;     // peak end-joint speed, m/s
    std::size_t rest = 20;      // frames after the segment
    std::string plane = "+y+z"; // loop plane in body axes (first axis = translation direction)
};

struct PartScript {
    int part = 4;  // body part number 1..7
    std::size_t lead = 10;  // frames before the first segment
    std::vector<SyntheticSegment> segments;
};

struct SyntheticClassSpec {
    std::string name;
    std::vector<PartScript> scripts;
    double noise = 0.0;            // metres
    std::size_t frames = 0;        // minimum scene length, 0 = fit the script
    std::size_t timing_jitter = 0; // +- frames on lead, durations and rests
    double amplitude_jitter = 0.0; // relative +- on amplitudes

    void validate() const {
        if (name.empty()) throw SchemaError("synthetic class needs a name");
        if (scripts.empty()) throw SchemaError("class '" + name + "' scripts no motion");
        if (noise < 0.0) throw SchemaError("class '" + name + "': noise must be >= 0");
        for (const auto& s : scripts) {
            if (s.part < 1 || s.part > static_cast<int>(kPartCount)) throw SchemaError("class '" + name + "': bad part");
            if (s.segments.empty()) throw SchemaError("class '" + name + "': part script without segments");
            for (const auto& seg : s.segments) {
                if (seg.duration < 1) throw SchemaError("class '" + name + "': segment duration must be >= 1");
                if (!(seg.amplitude > 0.0)) throw SchemaError("class '" + name + "': amplitude must be > 0");
            }
        }
    }
};

// Per-subject placement and build of the synthetic body.
struct SubjectProfile {
    double scale = 1.0;
    double heading = 0.0;  // radians about the vertical axis
    Vec3 position = Vec3(0.0, 0.0, 4.0);
};

// Bilaterally symmetric rest pose, body axes (x left, y up, z forward), metres.
inline Pose rest_pose() {
    Pose p;
    auto set = [&](Joint j, double x, double y, double z) { p[index_of(j)] = Vec3(x, y, z); };
    set(Joint::root, 0.0, 0.0, 0.0);
    set(Joint::lhip, 0.1, 0.0, 0.0);
    set(Joint::rhip, -0.1, 0.0, 0.0);
    set(Joint::lfemur, 0.1, -0.45, 0.0);
    set(Joint::ltibia, 0.1, -0.88, 0.0);
    set(Joint::rfemur, -0.1, -0.45, 0.0);
    set(Joint::rtibia, -0.1, -0.88, 0.0);
    set(Joint::spine, 0.0, 0.25, 0.0);
    set(Joint::throat, 0.0, 0.5, 0.0);
    set(Joint::lclavicle, 0.17, 0.47, 0.0);
    set(Joint::lhumerus, 0.2, 0.2, 0.0);
    set(Joint::lhand, 0.22, -0.05, 0.05);
    set(Joint::rclavicle, -0.17, 0.47, 0.0);
    set(Joint::rhumerus, -0.2, 0.2, 0.0);
    set(Joint::rhand, -0.22, -0.05, 0.05);
    return p;
}

namespace detail {

// "+y+z" -> (e_y, e_z). Uppercase or '-' flips the sign.
inline std::pair<Vec3, Vec3> parse_plane(const std::string& plane) {
    std::vector<Vec3> axes;
    double sign = 1.0;
    for (char c : plane) {
        if (c == '+') {
            sign = 1.0;
        } else if (c == '-') {
            sign = -1.0;
        } else if (c >= 'x' && c <= 'z') {
            Vec3 v = Vec3::Zero();
            v[c - 'x'] = sign;
            axes.push_back(v);
            sign = 1.0;
        } else {
            throw SchemaError("bad plane '" + plane + "'");
        }
    }
    if (axes.size() != 2 || std::abs(axes[0].dot(axes[1])) > 0.5) {
        throw SchemaError("plane '" + plane + "' must name two distinct axes");
    }
    return {axes[0], axes[1]};
}

inline std::int64_t jitter(Rng& rng, std::size_t amount) {
    return static_cast<std::int64_t>(uniform_index(rng, 2 * amount + 1)) - static_cast<std::int64_t>(amount);
}

inline std::size_t jittered(std::size_t value, std::int64_t delta, std::size_t minimum) {
    const std::int64_t v = static_cast<std::int64_t>(value) + delta;
    return static_cast<std::size_t>(std::max<std::int64_t>(v, static_cast<std::int64_t>(minimum)));
}

struct TimedSegment {
    std::size_t start = 0;
    std::size_t duration = 0;
    double amplitude = 0.0;
    Vec3 u, v;
};

}  // namespace detail

// Deterministic in (spec, seed, dt, profile). With zero jitter, different
// seeds change only the noise.
inline std::pair<SkeletonSequence, std::string> generate_synthetic_scene(const SyntheticClassSpec& spec,
                                                                         std::uint64_t seed, double dt = kDefaultDt,
                                                                         const SubjectProfile& profile = {},
                                                                         std::string subject = "synthetic") {
    spec.validate();
    Rng rng(mix_seed(seed));
    const double pi = std::numbers::pi;

    // Timeline per part.
    std::vector<std::pair<int, std::vector<detail::TimedSegment>>> timeline;
    std::size_t length = spec.frames;
    for (const auto& script : spec.scripts) {
        std::vector<detail::TimedSegment> segs;
        std::size_t t = detail::jittered(script.lead, detail::jitter(rng, spec.timing_jitter), 0);
        for (const auto& seg : script.segments) {
            const std::size_t dur = detail::jittered(seg.duration, detail::jitter(rng, spec.timing_jitter), 4);
            const std::size_t rest = detail::jittered(seg.rest, detail::jitter(rng, spec.timing_jitter), 0);
            const double amp = seg.amplitude * (1.0 + spec.amplitude_jitter * (2.0 * uniform01(rng) - 1.0));
            const auto [u, v] = detail::parse_plane(seg.plane);
            segs.push_back({t, dur, amp, u, v});
            t += dur + rest;
        }
        length = std::max(length, t + 1);
        timeline.emplace_back(script.part, std::move(segs));
    }
    length = std::max<std::size_t>(length, 2);

    const Pose rest = rest_pose();
    std::vector<Pose> body(length, rest);

    for (const auto& [part_no, segs] : timeline) {
        const BodyPart& part = kPartTable[static_cast<std::size_t>(part_no - 1)];
        for (const auto& s : segs) {
            const double T = static_cast<double>(s.duration);
            if (part_no == 1) {
                // Whole-body translation, displacement chosen so the peak speed is the amplitude.
                const double distance = 2.0 * s.amplitude * T * dt / pi;
                for (std::size_t f = s.start; f < length; ++f) {
                    const double tt = std::min(static_cast<double>(f - s.start), T);
                    const Vec3 d = s.u * (distance * 0.5 * (1.0 - std::cos(pi * tt / T)));
                    for (auto& p : body[f]) p += d;
                }
                continue;
            }
            // Closed loop: theta runs 0 -> 2 pi with a bell-shaped rate.
            const double radius = s.amplitude * T * dt / (pi * pi);
            const std::size_t last = std::min(s.start + s.duration, length - 1);
            for (std::size_t f = s.start; f <= last; ++f) {
                const double theta = pi * (1.0 - std::cos(pi * static_cast<double>(f - s.start) / T));
                const Vec3 loop = (std::cos(theta) - 1.0) * s.u + std::sin(theta) * s.v;
                if (part_no == 2) {
                    // Moving the spine joint would tilt the whole body frame; only the throat moves.
                    body[f][index_of(Joint::throat)] += radius * loop;
                } else {
                    body[f][index_of(part.ends[0])] += 0.5 * radius * loop;
                    body[f][index_of(part.ends[1])] += radius * loop;
                }
            }
        }
    }

    // Sensor noise: a static offset plus a slow drift per joint and axis,
    // together bounded by spec.noise.
    std::array<Vec3, kJointCount> offset, phase, period;
    for (std::size_t j = 0; j < kJointCount; ++j) {
        for (int a = 0; a < 3; ++a) {
            offset[j][a] = uniform(rng, -0.5, 0.5) * spec.noise;
            phase[j][a] = uniform(rng, 0.0, 2.0 * pi);
            period[j][a] = uniform(rng, 150.0, 300.0);
        }
    }

    const Eigen::Matrix3d rot = Eigen::AngleAxisd(profile.heading, Vec3::UnitY()).toRotationMatrix();
    std::vector<SkeletonFrame> frames;
    frames.reserve(length);
    for (std::size_t f = 0; f < length; ++f) {
        Pose p;
        for (std::size_t j = 0; j < kJointCount; ++j) {
            Vec3 g = profile.position + rot * (profile.scale * body[f][j]);
            if (spec.noise > 0.0) {
                for (int a = 0; a < 3; ++a) {
                    g[a] += offset[j][a] +
                            0.5 * spec.noise * std::sin(2.0 * pi * static_cast<double>(f) / period[j][a] + phase[j][a]);
                }
            }
            p[j] = g;
        }
        frames.emplace_back(f, p, FrameTag::global);
    }
    return {SkeletonSequence(std::move(frames), dt, std::move(subject), spec.name), spec.name};
}

// ------------------------------------------------------------------ synthetic corpora

struct SyntheticCorpusSpec {
    double dt = kDefaultDt;
    std::uint64_t seed = 1;
    std::size_t subjects = 7;
    std::size_t scenes_per_subject = 8;  // per class
    double scale_min = 0.85;
    double scale_max = 1.15;
    std::vector<SyntheticClassSpec> classes;
};

inline SyntheticCorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
    SyntheticCorpusSpec c;
    try {
        c.dt = j.value("dt", kDefaultDt);
        c.seed = j.value("seed", std::uint64_t{1});
        c.subjects = j.value("subjects", std::size_t{7});
        c.scenes_per_subject = j.value("scenes_per_subject", std::size_t{8});
        if (j.contains("subject_scale")) {
            c.scale_min = j.at("subject_scale").at(0).get<double>();
            c.scale_max = j.at("subject_scale").at(1).get<double>();
        }
        const double noise = j.value("noise", 0.0);
        const std::size_t frames = j.value("frames", std::size_t{0});
        const std::size_t tj = j.value("timing_jitter", std::size_t{0});
        const double aj = j.value("amplitude_jitter", 0.0);
        for (const auto& jc : j.at("classes")) {
            SyntheticClassSpec s;
            s.name = jc.at("name").get<std::string>();
            s.noise = jc.value("noise", noise);
            s.frames = jc.value("frames", frames);
            s.timing_jitter = jc.value("timing_jitter", tj);
            s.amplitude_jitter = jc.value("amplitude_jitter", aj);
            for (const auto& jp : jc.at("parts")) {
                PartScript ps;
                const auto part_name = jp.at("part").get<std::string>();
                const auto part = part_from_name(part_name);
                if (!part) throw SchemaError("unknown body part '" + part_name + "'");
                ps.part = part->number;
                ps.lead = jp.value("lead", std::size_t{10});
                for (const auto& js : jp.at("segments")) {
                    SyntheticSegment seg;
                    seg.duration = js.value("duration", seg.duration);
                    seg.amplitude = js.value("amplitude", seg.amplitude);
                    seg.rest = js.value("rest", seg.rest);
                    seg.plane = js.value("plane", seg.plane);
                    const std::size_t repeat = js.value("repeat", std::size_t{1});
                    for (std::size_t r = 0; r < repeat; ++r) ps.segments.push_back(seg);
                }
                s.scripts.push_back(std::move(ps));
            }
            s.validate();
            c.classes.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("malformed synthetic corpus spec: ") + ex.what());
    }
    if (c.classes.size() < 2) throw SchemaError("synthetic corpus needs at least two classes");
    if (c.subjects < 1 || c.scenes_per_subject < 1) throw SchemaError("synthetic corpus is empty");
    return c;
}

inline std::string subject_id(std::size_t s) { return "S" + std::to_string(s + 1); }

inline SubjectProfile subject_profile(const SyntheticCorpusSpec& spec, std::size_t s) {
    Rng rng(mix_seed(spec.seed, 0x5eb1ec7ULL + s));
    SubjectProfile p;
    p.scale = uniform(rng, spec.scale_min, spec.scale_max);
    p.heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
    p.position = Vec3(uniform(rng, -1.5, 1.5), uniform(rng, -0.2, 0.2), uniform(rng, 3.0, 5.0));
    return p;
}

// Writes <out>/<subject>/<class>_<k>.csv for every subject, class and scene,
// plus <out>/manifest.json (paths relative to it), and returns the manifest.
inline DatasetManifest generate_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& out_dir,
                                       unsigned workers = 1) {
    DatasetManifest m;
    m.dt = spec.dt;
    for (const auto& c : spec.classes) m.labels.push_back(c.name);
    struct Job {
        std::size_t subject, cls, k;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        for (std::size_t c = 0; c < spec.classes.size(); ++c) {
            for (std::size_t k = 0; k < spec.scenes_per_subject; ++k) jobs.push_back({s, c, k});
        }
    }
    m.entries.resize(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto& cls = spec.classes[job.cls];
        const std::string subject = subject_id(job.subject);
        const std::uint64_t seed = mix_seed(mix_seed(spec.seed, job.subject), job.cls * 1000003ULL + job.k);
        const auto [seq, label] = generate_synthetic_scene(cls, seed, spec.dt, subject_profile(spec, job.subject), subject);
        const std::string rel = subject + "/" + cls.name + "_" + std::to_string(job.k) + ".csv";
        write_file_atomic(out_dir / rel, serialize_sequence_csv(seq));
        m.entries[i] = {rel, subject, label, std::nullopt};
    });
    save_manifest(m, out_dir / "manifest.json");
    return m;
}

}  // namespace skelscene
