// skelscene: command-line front end for the activity-scene pipeline.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skelscene/skelscene.hpp"

namespace fs = std::filesystem;
using namespace skelscene;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "TOML-style config file");
    cmd->add_option("--set", c.sets, "override a config key (section.key=value)");
    cmd->add_option("--seed", c.seed, "run seed");
    cmd->add_option("-o,--out", c.out, "output directory (default: output_dir from the config)");
}

PipelineConfig load(const Common& c) {
    std::vector<std::string> sets = c.sets;
    if (c.seed) sets.push_back("seed=" + std::to_string(*c.seed));
    std::optional<fs::path> file;
    if (!c.config.empty()) file = fs::path(c.config);
    return load_pipeline_config(file, sets);
}

fs::path out_dir(const PipelineConfig& cfg, const Common& c) {
    return c.out.empty() ? cfg.resolve(cfg.output_dir) : fs::path(c.out);
}

void info(const std::string& s) { std::cerr << s << '\n'; }

SkeletonSequence read_sequence(const std::string& path, double dt) {
    try {
        return parse_sequence_csv(read_file(path), dt);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skeleton activity-scene recognition pipeline"};
    app.require_subcommand(1);

    Common common;

    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic corpus");
    add_common(synth, common);
    std::string spec_path;
    synth->add_option("--spec", spec_path, "class-spec JSON (default: synth_spec from the config)");

    auto* split = app.add_subcommand("split", "split a manifest by subject");
    add_common(split, common);
    std::string manifest_path;
    split->add_option("-m,--manifest", manifest_path, "dataset manifest (default: manifest from the config)");

    auto* augment = app.add_subcommand("augment", "write mirrored twins and a doubled manifest");
    std::string aug_in, aug_out_manifest, aug_dir;
    augment->add_option("-m,--manifest", aug_in, "input manifest")->required();
    augment->add_option("--out-manifest", aug_out_manifest, "output manifest (default: overwrite the input)");
    augment->add_option("--data-dir", aug_dir, "where mirrored CSVs go (default: next to the input manifest)");

    auto* featurize = app.add_subcommand("featurize", "compute scene feature matrices");
    add_common(featurize, common);
    std::string feat_manifest;
    featurize->add_option("-m,--manifest", feat_manifest, "dataset manifest (default: manifest from the config)");

    auto* train_cmd = app.add_subcommand("train", "train the classifier");
    add_common(train_cmd, common);
    std::string train_index, val_index;
    train_cmd->add_option("--train", train_index, "training feature index.json")->required();
    train_cmd->add_option("--val", val_index, "validation feature index.json")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ckpt, eval_index, eval_out = "eval";
    eval_cmd->add_option("--model", ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--features", eval_index, "feature index.json")->required();
    eval_cmd->add_option("-o,--out", eval_out, "output directory");

    auto* demo = app.add_subcommand("demo", "synth, split, augment, featurize, train and eval");
    add_common(demo, common);

    auto* speeds = app.add_subcommand("speeds", "dump one joint's speed and acceleration as CSV");
    std::string seq_path, joint_name_arg = "lhand", frame_name = "mixed";
    double dt = kDefaultDt;
    speeds->add_option("sequence", seq_path, "sequence CSV")->required();
    speeds->add_option("--joint", joint_name_arg, "joint name");
    speeds->add_option("--frame", frame_name, "mixed, global or local");
    speeds->add_option("--dt", dt, "sampling interval in seconds");

    auto* segment = app.add_subcommand("segment", "dump primitive-action boundaries as CSV");
    add_common(segment, common);
    segment->add_option("sequence", seq_path, "sequence CSV")->required();
    segment->add_option("--dt", dt, "sampling interval in seconds");

    CLI11_PARSE(app, argc, argv);

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (synth->parsed()) {
            const auto cfg = load(common);
            const fs::path spec = spec_path.empty() ? cfg.resolve(cfg.synth_spec) : fs::path(spec_path);
            if (spec.empty()) throw ConfigError("no class-spec file given");
            auto corpus = corpus_spec_from_json(nlohmann::json::parse(read_file(spec)));
            const auto m = generate_corpus(corpus, out_dir(cfg, common), worker_count());
            info("wrote " + std::to_string(m.entries.size()) + " scenes");
        } else if (split->parsed()) {
            const auto cfg = load(common);
            const fs::path mp = manifest_path.empty() ? cfg.resolve(cfg.manifest) : fs::path(manifest_path);
            const auto parts = split_stage(cfg, load_manifest(mp), mp.parent_path(), out_dir(cfg, common));
            info("train " + std::to_string(parts.train.entries.size()) + ", validation " +
                 std::to_string(parts.validation.entries.size()) + ", test " +
                 std::to_string(parts.test.entries.size()));
        } else if (augment->parsed()) {
            const fs::path in(aug_in);
            const fs::path out_m = aug_out_manifest.empty() ? in : fs::path(aug_out_manifest);
            const fs::path data = aug_dir.empty() ? in.parent_path() : fs::path(aug_dir);
            auto m = augment_dataset(load_manifest(in), in.parent_path(), data, worker_count());
            m = rebase_manifest(m, data, out_m.parent_path());
            save_manifest(m, out_m);
            info("wrote " + std::to_string(m.entries.size()) + " entries to " + out_m.string());
        } else if (featurize->parsed()) {
            const auto cfg = load(common);
            const fs::path mp = feat_manifest.empty() ? cfg.resolve(cfg.manifest) : fs::path(feat_manifest);
            const auto idx = featurize_manifest(load_manifest(mp), mp.parent_path(), out_dir(cfg, common),
                                                cfg.features, worker_count());
            info("featurized " + std::to_string(idx.entries.size()) + " scenes, " + std::to_string(idx.rows) + " x " +
                 std::to_string(idx.cols) + ", feature hash " + idx.feature_hash);
        } else if (train_cmd->parsed()) {
            const auto cfg = load(common);
            const auto art = train_stage(cfg, train_index, val_index, out_dir(cfg, common), info);
            info("best epoch " + std::to_string(art.result.best_epoch) + ", checkpoint " + art.checkpoint.string());
        } else if (eval_cmd->parsed()) {
            const auto ev = eval_stage(ckpt, eval_index, eval_out);
            std::cout << "accuracy " << ev.confusion.accuracy() << " (" << ev.confusion.trace() << "/"
                      << ev.confusion.total() << ")\n";
        } else if (demo->parsed()) {
            const auto cfg = load(common);
            const auto res = run_demo(cfg, out_dir(cfg, common), info);
            std::cout << "test accuracy " << res.confusion.accuracy() << '\n';
        } else if (speeds->parsed()) {
            const auto joint = joint_from_name(joint_name_arg);
            if (!joint) throw ConfigError("unknown joint '" + joint_name_arg + "'");
            std::cout << speed_dump_csv(read_sequence(seq_path, dt), *joint, speed_frame_from_name(frame_name));
        } else if (segment->parsed()) {
            const auto cfg = load(common);
            std::cout << segments_csv(segment_scene(read_sequence(seq_path, dt), cfg.features.partition));
        }
    } catch (const StageError& e) {
        std::cerr << "skelscene: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "skelscene: " << stage << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
