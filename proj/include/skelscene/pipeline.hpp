#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelscene/augment.hpp"
#include "skelscene/classifier.hpp"
#include "skelscene/config.hpp"
#include "skelscene/descriptor.hpp"
#include "skelscene/ingest.hpp"
#include "skelscene/kinematics.hpp"
#include "skelscene/partition.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

namespace fs = std::filesystem;

// Error raised by a pipeline stage; names the stage for the diagnostic.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// Paths of `m` (relative to `from`) re-expressed relative to `to`.
inline DatasetManifest rebase_manifest(DatasetManifest m, const fs::path& from, const fs::path& to) {
    for (auto& e : m.entries) {
        if (fs::path(e.path).is_absolute()) continue;
        e.path = fs::relative(fs::absolute(from / e.path), fs::absolute(to)).generic_string();
    }
    return m;
}

// ------------------------------------------------------------------ feature index

struct FeatureIndexEntry {
    std::string sfm;  // relative to the index file
    std::string subject;
    std::string label;
    std::string source;
};

struct FeatureIndex {
    std::string feature_hash;
    nlohmann::json feature_config;
    std::vector<std::string> labels;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<FeatureIndexEntry> entries;
};

inline nlohmann::json to_json(const FeatureIndex& idx) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : idx.entries) {
        entries.push_back({{"sfm", e.sfm}, {"subject", e.subject}, {"label", e.label}, {"source", e.source}});
    }
    return {{"feature_hash", idx.feature_hash}, {"feature_config", idx.feature_config}, {"labels", idx.labels},
            {"rows", idx.rows}, {"cols", idx.cols}, {"entries", std::move(entries)}};
}

inline FeatureIndex load_feature_index(const fs::path& path) {
    FeatureIndex idx;
    try {
        const auto j = nlohmann::json::parse(read_file(path));
        idx.feature_hash = j.at("feature_hash").get<std::string>();
        idx.feature_config = j.at("feature_config");
        idx.labels = j.at("labels").get<std::vector<std::string>>();
        idx.rows = j.at("rows").get<std::size_t>();
        idx.cols = j.at("cols").get<std::size_t>();
        for (const auto& e : j.at("entries")) {
            idx.entries.push_back({e.at("sfm").get<std::string>(), e.at("subject").get<std::string>(),
                                   e.at("label").get<std::string>(), e.value("source", std::string{})});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(path.string() + ": malformed feature index: " + ex.what());
    }
    return idx;
}

inline std::vector<LabeledInput> load_inputs(const FeatureIndex& idx, const fs::path& index_dir) {
    std::vector<LabeledInput> out;
    out.reserve(idx.entries.size());
    for (const auto& e : idx.entries) {
        const fs::path p = index_dir / e.sfm;
        SfmFile f;
        try {
            f = decode_sfm(read_file(p));
        } catch (const Error& ex) {
            throw Error(p.string() + ": " + ex.what());
        }
        if (f.rows != idx.rows || f.cols != idx.cols) throw ShapeMismatch(p.string() + ": shape differs from the index");
        if (f.label >= idx.labels.size()) throw LabelOutOfRange(p.string() + ": label index out of range");
        out.push_back({ClassifierInput(f.values, f.rows, f.cols), f.label});
    }
    return out;
}

// Featurizes every manifest entry into <out>/<entry path>.sfm plus a
// .rows.csv sidecar and writes <out>/index.json.
inline FeatureIndex featurize_manifest(const DatasetManifest& m, const fs::path& base, const fs::path& out,
                                       const FeatureConfig& cfg, unsigned workers = 1) {
    FeatureIndex idx;
    idx.feature_hash = feature_hash(cfg);
    idx.feature_config = to_json(cfg);
    idx.labels = m.labels;
    idx.rows = kStreamCount * cfg.partition.max_pa;
    idx.cols = cfg.width;
    idx.entries.resize(m.entries.size());
    parallel_for(m.entries.size(), workers, [&](std::size_t i) {
        const auto& e = m.entries[i];
        const SkeletonSequence seq = load_entry(m, e, base);
        SceneFeatureMatrix mat = [&] {
            try {
                return featurize_scene(seq, cfg);
            } catch (const Error& ex) {
                throw Error(e.path + ": " + ex.what());
            }
        }();
        fs::path rel = fs::path(e.path).is_absolute() ? fs::path(e.path).filename() : fs::path(e.path);
        rel.replace_extension(".sfm");
        // Keep ../ segments from escaping the output directory.
        std::string rel_str = rel.generic_string();
        for (std::size_t pos; (pos = rel_str.find("../")) != std::string::npos;) rel_str.replace(pos, 3, "up/");
        const auto label = static_cast<std::uint32_t>(m.label_index(e.label));
        write_file_atomic(out / rel_str, encode_sfm(mat, label));
        fs::path meta = out / rel_str;
        meta.replace_extension(".rows.csv");
        write_file_atomic(meta, encode_row_meta(mat));
        idx.entries[i] = {rel_str, e.subject, e.label, e.path};
    });
    write_file_atomic(out / "index.json", to_json(idx).dump(2) + "\n");
    return idx;
}

// ------------------------------------------------------------------ reports

inline std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
    std::ostringstream out;
    out << "truth\\predicted";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        out << labels[t];
        for (std::size_t p = 0; p < cm.classes(); ++p) out << ',' << cm(t, p);
        out << '\n';
    }
    return out.str();
}

inline std::string metrics_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
    std::ostringstream out;
    out << std::setprecision(6) << std::fixed;
    out << "class,precision,recall,support\n";
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        out << labels[c] << ',' << cm.precision(c) << ',' << cm.recall(c) << ',' << cm.row_sum(c) << '\n';
    }
    out << "overall,,," << cm.total() << '\n';
    out << "accuracy," << cm.accuracy() << ",,\n";
    return out.str();
}

// Plain (P2) PGM heatmap of row-normalized counts, `cell` pixels per entry.
inline std::string confusion_pgm(const ConfusionMatrix& cm, std::size_t cell = 16) {
    const std::size_t n = cm.classes() * cell;
    std::ostringstream out;
    out << "P2\n" << n << ' ' << n << "\n255\n";
    for (std::size_t y = 0; y < n; ++y) {
        const std::size_t t = y / cell;
        const std::size_t row = cm.row_sum(t);
        for (std::size_t x = 0; x < n; ++x) {
            const std::size_t p = x / cell;
            const std::size_t v = row == 0 ? 0 : (255 * cm(t, p) + row / 2) / row;
            out << v << (x + 1 == n ? '\n' : ' ');
        }
    }
    return out.str();
}

// ------------------------------------------------------------------ stages

using Log = std::function<void(const std::string&)>;

struct TrainArtifacts {
    TrainResult result;
    fs::path checkpoint;
    fs::path history;
};

inline TrainArtifacts train_stage(const PipelineConfig& cfg, const fs::path& train_index, const fs::path& val_index,
                                  const fs::path& out, const Log& log = {}) {
    const FeatureIndex tr = load_feature_index(train_index);
    const FeatureIndex va = load_feature_index(val_index);
    if (tr.feature_hash != va.feature_hash) {
        throw HashMismatch("training and validation features come from different feature configs");
    }
    if (tr.feature_hash != feature_hash(cfg.features)) {
        throw HashMismatch("features were produced with a different feature config than " + cfg.hash());
    }
    if (tr.labels != va.labels) throw SchemaError("training and validation label vocabularies differ");
    const auto train_set = load_inputs(tr, train_index.parent_path());
    const auto val_set = load_inputs(va, val_index.parent_path());
    ClassifierConfig cc = cfg.classifier;
    cc.classes = tr.labels.size();
    cc.rows = tr.rows;
    cc.cols = tr.cols;
    auto result = train(cc, train_set, val_set, [&](const EpochStats& s) {
        if (!log) return;
        std::ostringstream msg;
        msg << std::fixed << std::setprecision(4) << "epoch " << s.epoch << " train_loss " << s.train_loss
            << " train_acc " << s.train_acc << " val_loss " << s.val_loss << " val_acc " << s.val_acc;
        log(msg.str());
    });
    const nlohmann::json meta = {{"feature_hash", tr.feature_hash},
                                 {"config_hash", cfg.hash()},
                                 {"labels", tr.labels},
                                 {"best_epoch", result.best_epoch}};
    TrainArtifacts art{std::move(result), out / "model.skm", out / "history.csv"};
    write_file_atomic(art.checkpoint, encode_checkpoint(art.result.model, meta));
    write_file_atomic(art.history, history_csv(art.result.history));
    write_file_atomic(out / "train_run.json", nlohmann::json({{"config_hash", cfg.hash()},
                                                               {"feature_hash", tr.feature_hash},
                                                               {"best_epoch", art.result.best_epoch}})
                                                      .dump(2) + "\n");
    return art;
}

struct EvalArtifacts {
    ConfusionMatrix confusion;
    std::vector<std::string> labels;
};

inline EvalArtifacts eval_stage(const fs::path& checkpoint, const fs::path& index_path, const fs::path& out) {
    const Checkpoint ck = decode_checkpoint(read_file(checkpoint));
    const FeatureIndex idx = load_feature_index(index_path);
    const std::string model_hash = ck.metadata.value("feature_hash", std::string{});
    if (model_hash != idx.feature_hash) {
        throw HashMismatch("checkpoint was trained on features " + model_hash + " but " + index_path.string() +
                           " holds features " + idx.feature_hash);
    }
    const auto labels = ck.metadata.value("labels", idx.labels);
    if (labels != idx.labels) throw SchemaError("checkpoint and feature label vocabularies differ");
    const auto samples = load_inputs(idx, index_path.parent_path());
    const ConfusionMatrix cm = evaluate(ck.model, samples);
    write_file_atomic(out / "confusion.csv", confusion_csv(cm, labels));
    write_file_atomic(out / "confusion.pgm", confusion_pgm(cm));
    write_file_atomic(out / "metrics.csv", metrics_csv(cm, labels));
    write_file_atomic(out / "eval_run.json",
                      nlohmann::json({{"feature_hash", idx.feature_hash},
                                      {"config_hash", ck.metadata.value("config_hash", std::string{})},
                                      {"accuracy", cm.accuracy()}})
                              .dump(2) + "\n");
    return {cm, labels};
}

inline SplitManifests split_stage(const PipelineConfig& cfg, const DatasetManifest& m, const fs::path& base,
                                  const fs::path& out) {
    SplitManifests s = split_dataset(m, cfg.split);
    s.train = rebase_manifest(s.train, base, out);
    s.validation = rebase_manifest(s.validation, base, out);
    s.test = rebase_manifest(s.test, base, out);
    save_manifest(s.train, out / "train.json");
    save_manifest(s.validation, out / "validation.json");
    save_manifest(s.test, out / "test.json");
    return s;
}

struct DemoResult {
    std::vector<EpochStats> history;
    ConfusionMatrix confusion;
    fs::path out_dir;
};

// synth -> split -> mirror the training split -> featurize -> train -> eval.
inline DemoResult run_demo(const PipelineConfig& cfg, const fs::path& out, const Log& log = {}) {
    const unsigned workers = worker_count();
    auto say = [&](const std::string& s) {
        if (log) log(s);
    };
    if (cfg.synth_spec.empty()) throw ConfigError("demo needs synth_spec");
    const fs::path data = out / "data";
    const DatasetManifest corpus = run_stage("synth", [&] {
        say("synth: generating corpus from " + cfg.resolve(cfg.synth_spec).string());
        SyntheticCorpusSpec spec =
            corpus_spec_from_json(nlohmann::json::parse(read_file(cfg.resolve(cfg.synth_spec))));
        return generate_corpus(spec, data, workers);
    });
    const fs::path splits = out / "splits";
    SplitManifests parts = run_stage("split", [&] { return split_stage(cfg, corpus, data, splits); });
    if (cfg.mirror_train) {
        parts.train = run_stage("augment", [&] {
            say("augment: mirroring " + std::to_string(parts.train.entries.size()) + " training scenes");
            DatasetManifest aug = augment_dataset(parts.train, splits, out / "mirrored", workers);
            aug = rebase_manifest(aug, out / "mirrored", splits);
            save_manifest(aug, splits / "train_augmented.json");
            return aug;
        });
    }
    const fs::path feats = out / "features";
    run_stage("featurize", [&] {
        say("featurize: " + std::to_string(parts.train.entries.size() + parts.validation.entries.size() +
                                           parts.test.entries.size()) + " scenes");
        featurize_manifest(parts.train, splits, feats / "train", cfg.features, workers);
        featurize_manifest(parts.validation, splits, feats / "validation", cfg.features, workers);
        featurize_manifest(parts.test, splits, feats / "test", cfg.features, workers);
        return 0;
    });
    const fs::path model_dir = out / "model";
    TrainArtifacts art = run_stage("train", [&] {
        return train_stage(cfg, feats / "train" / "index.json", feats / "validation" / "index.json", model_dir, log);
    });
    EvalArtifacts ev = run_stage("eval", [&] { return eval_stage(art.checkpoint, feats / "test" / "index.json", out / "eval"); });
    say("eval: test accuracy " + std::to_string(ev.confusion.accuracy()));
    return {art.result.history, ev.confusion, out};
}

// ------------------------------------------------------------------ inspection dumps

// frame,speed,accel for one joint (speed aligned to the later frame of each pair).
inline std::string speed_dump_csv(const SkeletonSequence& global, Joint joint, SpeedFrame frame) {
    const SkeletonSequence local = to_local(global);
    const SpeedSeries v = joint_speed(global, local, joint, frame);
    std::ostringstream out;
    out.precision(17);
    out << "frame,speed,accel\n";
    std::vector<double> a;
    if (v.values.size() >= 2) a = synthetic_acceleration(v, global.dt()).values;
    for (std::size_t k = 0; k < v.values.size(); ++k) {
        out << k + 1 << ',' << v.values[k] << ',';
        if (k >= 1) out << a[k - 1];
        out << '\n';
    }
    return out.str();
}

// stream,q,start,end,score
inline std::string segments_csv(const SceneSegmentation& seg) {
    std::ostringstream out;
    out.precision(17);
    out << "stream,q,start,end,score\n";
    for (std::size_t s = 0; s < kStreamCount; ++s) {
        for (const auto& pa : seg.streams[s]) {
            out << stream_name(s) << ',' << pa.ordinal << ',' << pa.interval.start << ',' << pa.interval.end << ','
                << pa.score << '\n';
        }
    }
    return out.str();
}

}  // namespace skelscene
