#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelscene/classifier.hpp"
#include "skelscene/descriptor.hpp"
#include "skelscene/errors.hpp"
#include "skelscene/ingest.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

// ------------------------------------------------------------------ key/value documents
//
// TOML-style subset: `[section]` headers, `key = value` lines, `#` comments.
// Values are bare words, numbers, "quoted strings" or [lists, of, values].
// Keys are flattened to "section.key".

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

inline std::string trimmed(std::string_view s) { return std::string(trim(s)); }

inline std::string unquote(std::string s) {
    s = trimmed(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace detail

inline KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::istringstream in{std::string(text)};
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = detail::trimmed(detail::strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line_no, 1, "unterminated section header");
            section = detail::trimmed(std::string_view(s).substr(1, s.size() - 2));
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, 1, "expected key = value");
        const std::string key = detail::trimmed(std::string_view(s).substr(0, eq));
        if (key.empty()) throw ParseError(line_no, 1, "empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.contains(full)) throw ParseError(line_no, 1, "duplicate key '" + full + "'");
        out[full] = detail::trimmed(std::string_view(s).substr(eq + 1));
    }
    return out;
}

namespace detail {

inline std::vector<std::string> as_list(const std::string& raw) {
    std::string s = trimmed(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    for (auto part : split_csv_line(s)) {
        std::string v = unquote(std::string(part));
        if (!v.empty()) out.push_back(std::move(v));
    }
    return out;
}

inline double as_double(const std::string& key, const std::string& raw) {
    const std::string s = unquote(raw);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a number, got '" + raw + "'");
    }
    return v;
}

inline std::uint64_t as_uint(const std::string& key, const std::string& raw) {
    const std::string s = unquote(raw);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + raw + "'");
    }
    return v;
}

inline bool as_bool(const std::string& key, const std::string& raw) {
    const std::string s = unquote(raw);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + raw + "'");
}

}  // namespace detail

// ------------------------------------------------------------------ pipeline config

struct PipelineConfig {
    std::filesystem::path base_dir = ".";  // relative paths resolve here
    std::string manifest;
    std::string synth_spec;
    std::string output_dir = "out";
    std::uint64_t seed = 7;
    SplitSpec split;
    FeatureConfig features;
    ClassifierConfig classifier;
    bool mirror_train = true;

    std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    void validate() const {
        if (features.partition.max_pa < 1) throw ConfigError("partition.max_pa must be >= 1");
        if (features.width < kLocalBlockWidth) {
            throw ConfigError("descriptor.width must be >= " + std::to_string(kLocalBlockWidth));
        }
        if (features.partition.threshold.fraction < 0.0 || features.partition.threshold.floor < 0.0) {
            throw ConfigError("speed threshold knobs must be >= 0");
        }
        classifier.validate();
    }

    // Fingerprint of the whole experiment.
    std::string hash() const {
        nlohmann::json j = {{"features", to_json(features)},
                            {"classifier", to_json(classifier)},
                            {"split", {{"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
                            {"mirror_train", mirror_train},
                            {"seed", seed}};
        return hex64(fnv1a(j.dump()));
    }
};

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "manifest", "synth_spec", "output_dir", "seed",
        "split.train", "split.validation", "split.test",
        "partition.vtau_fraction", "partition.vtau_floor", "partition.gap", "partition.min_run",
        "partition.max_pa", "partition.speed_frame",
        "descriptor.width",
        "classifier.widths", "classifier.filters", "classifier.dense", "classifier.learning_rate",
        "classifier.optimizer", "classifier.epochs", "classifier.batch_size", "classifier.keep_prob",
        "augment.mirror_train",
    };
    return keys;
}

// Applies key/value pairs on top of `cfg`. Unknown keys are rejected.
inline void apply_key_values(PipelineConfig& cfg, const KeyValues& kv) {
    using namespace detail;
    for (const auto& [key, raw] : kv) {
        if (!known_config_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
        if (key == "manifest") cfg.manifest = unquote(raw);
        else if (key == "synth_spec") cfg.synth_spec = unquote(raw);
        else if (key == "output_dir") cfg.output_dir = unquote(raw);
        else if (key == "seed") cfg.seed = as_uint(key, raw);
        else if (key == "split.train") cfg.split.train = as_list(raw);
        else if (key == "split.validation") cfg.split.validation = as_list(raw);
        else if (key == "split.test") cfg.split.test = as_list(raw);
        else if (key == "partition.vtau_fraction") cfg.features.partition.threshold.fraction = as_double(key, raw);
        else if (key == "partition.vtau_floor") cfg.features.partition.threshold.floor = as_double(key, raw);
        else if (key == "partition.gap") cfg.features.partition.gap = as_uint(key, raw);
        else if (key == "partition.min_run") cfg.features.partition.min_run = as_uint(key, raw);
        else if (key == "partition.max_pa") cfg.features.partition.max_pa = as_uint(key, raw);
        else if (key == "partition.speed_frame") cfg.features.partition.frame = speed_frame_from_name(unquote(raw));
        else if (key == "descriptor.width") cfg.features.width = as_uint(key, raw);
        else if (key == "classifier.widths") {
            cfg.classifier.widths.clear();
            for (const auto& w : as_list(raw)) cfg.classifier.widths.push_back(as_uint(key, w));
        }
        else if (key == "classifier.filters") cfg.classifier.filters = as_uint(key, raw);
        else if (key == "classifier.dense") cfg.classifier.dense = as_uint(key, raw);
        else if (key == "classifier.learning_rate") cfg.classifier.learning_rate = as_double(key, raw);
        else if (key == "classifier.optimizer") cfg.classifier.optimizer = optimizer_from_name(unquote(raw));
        else if (key == "classifier.epochs") cfg.classifier.epochs = as_uint(key, raw);
        else if (key == "classifier.batch_size") cfg.classifier.batch_size = as_uint(key, raw);
        else if (key == "classifier.keep_prob") cfg.classifier.keep_prob = as_double(key, raw);
        else if (key == "augment.mirror_train") cfg.mirror_train = as_bool(key, raw);
    }
    // The input shape follows the feature layout; the run seed drives training.
    cfg.classifier.rows = kStreamCount * cfg.features.partition.max_pa;
    cfg.classifier.cols = cfg.features.width;
    cfg.classifier.seed = cfg.seed;
}

inline PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    cfg.split = {{"S1", "S2", "S3", "S4", "S5"}, {"S6"}, {"S7"}};
    apply_key_values(cfg, {});
    return cfg;
}

// Defaults, then the file (if any), then overrides ("section.key=value").
inline PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& file,
                                           const std::vector<std::string>& overrides = {}) {
    PipelineConfig cfg = default_pipeline_config();
    if (file) {
        try {
            apply_key_values(cfg, parse_key_values(read_file(*file)));
        } catch (const ParseError& e) {
            throw ConfigError(file->string() + ": " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(file->string() + ": " + e.what());
        }
        cfg.base_dir = file->has_parent_path() ? file->parent_path() : std::filesystem::path(".");
    }
    KeyValues kv;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
        kv[detail::trimmed(std::string_view(o).substr(0, eq))] = detail::trimmed(std::string_view(o).substr(eq + 1));
    }
    apply_key_values(cfg, kv);
    cfg.validate();
    return cfg;
}

}  // namespace skelscene
