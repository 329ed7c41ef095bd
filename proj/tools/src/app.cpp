// SPDX-License-Identifier: Apache-2.0
#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gtpdm/data/dataset.hpp"
#include "gtpdm/errors.hpp"
#include "gtpdm/evaluation/analysis.hpp"
#include "gtpdm/evaluation/evaluate.hpp"
#include "gtpdm/pipeline/experiment.hpp"
#include "gtpdm/synthetic/generator.hpp"
#include "gtpdm/training/checkpoint.hpp"
#include "manifest.hpp"

namespace gtpdm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
    // command-specific
    std::string annotations;
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    bool attention = false;
    std::size_t runs = 200;
    std::size_t warmup = 10;
};

struct Context {
    std::string command;
    Options opt;
    fs::path out;
    RunManifest manifest;
    std::ostream& stdout_;
};

int exit_code_for(const std::string& kind) {
    static const std::map<std::string, int> codes{{"usage", kUsage},           {"config", kConfig},
                                                  {"io", kIo},                 {"validation", kValidation},
                                                  {"feature", kValidation},    {"training", kTraining},
                                                  {"numeric", kNumeric},       {"dimension", kInternal},
                                                  {"tape", kInternal}};
    const auto it = codes.find(kind);
    return it == codes.end() ? kInternal : it->second;
}

json error_record(const std::string& command, const std::string& kind, const std::string& message) {
    return {{"error", {{"command", command}, {"kind", kind}, {"message", message}, {"exit_code", exit_code_for(kind)}}}};
}

pipeline::ExperimentConfig load_config(Context& ctx) {
    json j = json::object();
    if (!ctx.opt.config.empty()) {
        j = pipeline::read_json_file(ctx.opt.config);
        ctx.manifest.add_input(ctx.opt.config);
    }
    for (const auto& o : ctx.opt.overrides) pipeline::apply_override(j, o);
    if (ctx.opt.seed) pipeline::apply_override(j, "seed=" + std::to_string(*ctx.opt.seed));
    pipeline::ExperimentConfig cfg = j.get<pipeline::ExperimentConfig>();
    if (cfg.data.source == pipeline::DataSource::Annotations) {
        const fs::path p = pipeline::resolve_data_path(cfg.data.annotations);
        if (!fs::exists(p)) throw IoError("annotation file '" + p.string() + "' does not exist");
        ctx.manifest.add_input(p);
    }
    ctx.manifest.config = cfg;
    ctx.manifest.seed = cfg.seed ? *cfg.seed : cfg.train.seed;
    return cfg;
}

training::LoadedCheckpoint load_checkpoint(Context& ctx) {
    if (ctx.opt.checkpoint.empty()) throw ConfigError(ctx.command + ": --checkpoint is required");
    if (!fs::exists(ctx.opt.checkpoint)) throw IoError("checkpoint '" + ctx.opt.checkpoint + "' does not exist");
    ctx.manifest.add_input(ctx.opt.checkpoint);
    return training::load_checkpoint(ctx.opt.checkpoint);
}

template <typename Fn>
fs::path write_output(Context& ctx, const std::string& name, Fn&& body) {
    const fs::path p = ctx.out / name;
    fs::create_directories(p.parent_path());
    {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw IoError("cannot write '" + p.string() + "'");
        body(f);
        if (!f) throw IoError("write failed for '" + p.string() + "'");
    }
    ctx.manifest.add_output(p);
    return p;
}

void write_json(Context& ctx, const std::string& name, const json& j) {
    write_output(ctx, name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void print_report(std::ostream& out, const evaluation::MetricsReport& r) {
    out << std::fixed << std::setprecision(4) << r.key << ": acc " << r.accuracy << "  auc " << r.auc << "  f1 "
        << r.f1 << "  precision " << r.precision << "  recall " << r.recall << "  (n=" << r.samples << ")";
    if (r.flags.any()) out << "  flagged";
    out << '\n' << std::defaultfloat;
}

const std::vector<data::AnnotationRecord>& pick_split(const data::SplitRecords& s, const std::string& which) {
    if (which == "train") return s.train;
    if (which == "val") return s.val;
    if (which == "test") return s.test;
    throw ConfigError("--split must be train, val or test, got '" + which + "'");
}

/// Features for data scored by a trained model: the config's settings with the
/// training-time reference-line apex unless the config pins one.
data::FeaturizeConfig scoring_features(const pipeline::ExperimentConfig& cfg, const training::CheckpointMeta& meta) {
    data::FeaturizeConfig f = cfg.features;
    f.balance = false;
    if (!f.y_min) f.y_min = meta.features.y_min;
    return f;
}

model::ModelInput bench_input(const model::ModelConfig& cfg) {
    CounterRng rng(7);
    const std::size_t T = cfg.T;
    const auto fill = [&](Shape s, double lo, double hi) {
        Tensor t(std::move(s));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
        return t;
    };
    model::ModelInput in;
    in.batch = 1;
    in.pdm = fill({1, T, 3}, -1, 1);
    in.displacement = fill({1, T, 2}, -20, 20);
    in.velocity = fill({1, T, 2}, -3, 3);
    in.ego = cfg.ego_mode == model::EgoMode::SpeedAccel ? fill({1, T, 1}, 0, 40) : Tensor(Shape{1, T, cfg.ego_states});
    if (cfg.ego_mode == model::EgoMode::StateOneHot) {
        for (std::size_t t = 0; t < T; ++t) in.ego[t * cfg.ego_states] = 1.0;
    }
    in.accel = fill({1, T, 1}, -2, 2);
    in.keypoints = fill({1, T, cfg.joints, cfg.joint_channels}, 0, 60);
    in.labels = {0};
    return in;
}

// ---- commands ---------------------------------------------------------------

void cmd_synth_gen(Context& ctx) {
    const pipeline::ExperimentConfig cfg = load_config(ctx);
    if (cfg.data.source != pipeline::DataSource::Synthetic) {
        throw ConfigError("synth-gen: data.source must be synthetic");
    }
    const synthetic::Scenario s = synthetic::generate(cfg.data.scenario);
    write_output(ctx, "annotations.jsonl", [&](std::ostream& o) { data::write_annotations(o, s.records); });
    write_json(ctx, "scenario.json", cfg.data.scenario);
    ctx.stdout_ << "generated " << s.records.size() << " tracks into " << (ctx.out / "annotations.jsonl").string()
                << '\n';
}

void cmd_featurize(Context& ctx) {
    if (!ctx.opt.annotations.empty()) {
        ctx.opt.overrides.push_back("data.source=annotations");
        ctx.opt.overrides.push_back("data.annotations=" + fs::absolute(ctx.opt.annotations).string());
    }
    const pipeline::ExperimentConfig cfg = load_config(ctx);
    const pipeline::PreparedData p = pipeline::prepare(cfg);
    const std::pair<const char*, const data::Dataset*> parts[]{{"train", &p.train}, {"val", &p.val}, {"test", &p.test}};
    for (const auto& [name, d] : parts) {
        const fs::path path = ctx.out / (std::string(name) + ".bin");
        fs::create_directories(ctx.out);
        data::save_dataset(path, *d);
        ctx.manifest.add_output(path);
        ctx.stdout_ << name << ": " << d->size() << " windows, " << d->positives() << " crossing\n";
    }
    write_json(ctx, "features.json", p.features);
    write_json(ctx, "split.json",
               {{"name", p.split.name}, {"seed", p.split.seed}, {"train", p.split.train}, {"val", p.split.val},
                {"test", p.split.test}});
}

void cmd_train(Context& ctx) {
    const pipeline::ExperimentConfig cfg = load_config(ctx);
    const pipeline::PreparedData data = pipeline::prepare(cfg);
    ctx.stdout_ << "train " << data.train.size() << " / val " << data.val.size() << " / test " << data.test.size()
                << " windows\n";
    pipeline::RunOptions opts;
    opts.checkpoint_dir = ctx.out / "checkpoints";
    opts.on_epoch = [&](const training::EpochRecord& e) {
        ctx.stdout_ << std::fixed << std::setprecision(5) << "epoch " << e.epoch << '/' << cfg.train.epochs
                    << "  train_loss " << e.train_loss << "  val_loss " << e.val_loss << "  val_acc "
                    << e.val.accuracy << "  lr " << std::scientific << std::setprecision(2) << e.lr << '\n'
                    << std::defaultfloat;
    };
    const pipeline::ExperimentResult r = pipeline::run_experiment(cfg, data, opts);
    for (const char* ck : {"checkpoints/last.ckpt", "checkpoints/best.ckpt"}) {
        if (fs::exists(ctx.out / ck)) ctx.manifest.add_output(ctx.out / ck);
    }
    const fs::path model_path = ctx.out / "model.ckpt";
    training::save_checkpoint(model_path, *r.model, {r.features, cfg.train});
    ctx.manifest.add_output(model_path);
    write_output(ctx, "history.jsonl", [&](std::ostream& o) { training::write_history_jsonl(o, r.state.history); });
    write_json(ctx, "metrics.json", r.test);
    print_report(ctx.stdout_, r.test);
}

void cmd_eval(Context& ctx) {
    const training::LoadedCheckpoint ck = load_checkpoint(ctx);
    data::Dataset d;
    if (!ctx.opt.data.empty()) {
        if (!fs::exists(ctx.opt.data)) throw IoError("dataset '" + ctx.opt.data + "' does not exist");
        ctx.manifest.add_input(ctx.opt.data);
        d = data::load_dataset(ctx.opt.data);
    } else {
        const pipeline::ExperimentConfig cfg = load_config(ctx);
        const auto records = pipeline::load_records(cfg);
        const data::SplitRecords parts = data::apply_split(records, pipeline::make_split(records, cfg.split));
        d = data::featurize(pick_split(parts, ctx.opt.split), scoring_features(cfg, ck.meta));
    }
    evaluation::MetricsReport r = evaluation::evaluate(*ck.model, d);
    r.key = ctx.opt.split;
    write_json(ctx, "metrics.json", r);
    write_output(ctx, "metrics.csv", [&](std::ostream& o) { evaluation::write_metrics_csv(o, std::span(&r, 1)); });
    if (ctx.opt.attention) {
        std::vector<std::size_t> idx(std::min<std::size_t>(d.size(), 64));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        const auto maps = evaluation::export_attention(*ck.model, data::make_batch(d, idx));
        write_output(ctx, "attention.txt", [&](std::ostream& o) { evaluation::write_attention_grid(o, maps); });
    }
    print_report(ctx.stdout_, r);
}

void cmd_ablate(Context& ctx) {
    const pipeline::ExperimentConfig cfg = load_config(ctx);
    if (cfg.analysis.ablation_subsets.empty()) throw ConfigError("ablate: analysis.ablation_subsets is empty");
    const auto rows = pipeline::ablate_features(cfg, cfg.analysis.ablation_subsets, cfg.analysis.ablation_mode);
    write_output(ctx, "ablation.csv", [&](std::ostream& o) { pipeline::write_ablation_csv(o, rows); });
    json j = json::array();
    for (const auto& row : rows) j.push_back(row.metrics);
    write_json(ctx, "ablation.json", j);
    for (const auto& row : rows) print_report(ctx.stdout_, row.metrics);
}

void cmd_sweep(Context& ctx) {
    const pipeline::ExperimentConfig cfg = load_config(ctx);
    const auto& a = cfg.analysis;
    if (a.tte_points.empty() && a.observation_lengths.empty()) {
        throw ConfigError("sweep: set analysis.tte_points and/or analysis.observation_lengths");
    }
    if (!a.tte_points.empty()) {
        std::vector<evaluation::MetricsReport> reports;
        if (!ctx.opt.checkpoint.empty()) {
            const training::LoadedCheckpoint ck = load_checkpoint(ctx);
            const auto records = pipeline::load_records(cfg);
            const data::SplitRecords parts = data::apply_split(records, pipeline::make_split(records, cfg.split));
            const data::FeaturizeConfig f = scoring_features(cfg, ck.meta);
            if (!f.y_min) throw ConfigError("sweep: checkpoint carries no y_min; set features.y_min");
            reports = evaluation::sweep_tte(*ck.model, pick_split(parts, ctx.opt.split), f, *f.y_min, a.tte_points);
        } else {
            const pipeline::PreparedData p = pipeline::prepare(cfg);
            const pipeline::ExperimentResult r = pipeline::run_experiment(cfg, p);
            reports = evaluation::sweep_tte(*r.model, pick_split(p.records, ctx.opt.split), p.features,
                                            *p.features.y_min, a.tte_points);
        }
        write_output(ctx, "tte_sweep.csv", [&](std::ostream& o) { evaluation::write_metrics_csv(o, reports); });
        for (const auto& r : reports) print_report(ctx.stdout_, r);
    }
    if (!a.observation_lengths.empty()) {
        const auto reports = pipeline::sweep_observation_length(cfg, a.observation_lengths);
        write_output(ctx, "observation_length.csv", [&](std::ostream& o) { evaluation::write_metrics_csv(o, reports); });
        for (const auto& r : reports) print_report(ctx.stdout_, r);
    }
}

void cmd_bench(Context& ctx) {
    std::unique_ptr<model::GTransPDM> model;
    if (!ctx.opt.checkpoint.empty()) {
        model = load_checkpoint(ctx).model;
    } else {
        const pipeline::ExperimentConfig cfg = load_config(ctx);
        model = std::make_unique<model::GTransPDM>(cfg.model, pipeline::load_graph(cfg), cfg.train.seed);
    }
    const evaluation::LatencyStats s =
        evaluation::benchmark_latency(*model, bench_input(model->config()), ctx.opt.runs, ctx.opt.warmup);
    write_json(ctx, "latency.json", s);
    ctx.stdout_ << std::fixed << std::setprecision(4) << "median_ms " << s.median_ms << "\np95_ms " << s.p95_ms
                << "\nparameters " << s.parameters << "\nruns " << s.runs << "\nhardware " << s.hardware << '\n'
                << std::defaultfloat;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Crossing-intention prediction: data generation, training and evaluation", "gtpdm"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every command");
    Options opt;

    const auto common = [&](CLI::App* c) {
        c->add_option("--config", opt.config, "Experiment config (JSON)");
        c->add_option("--seed", opt.seed, "Replace every seed in the config");
        c->add_option("--out", opt.out, "Output directory (default runs/<command>)");
        c->add_option("--override", opt.overrides, "Config override key=value (repeatable)")->allow_extra_args(false);
    };
    const std::map<std::string, std::function<void(Context&)>> handlers{
        {"synth-gen", cmd_synth_gen}, {"featurize", cmd_featurize}, {"train", cmd_train}, {"eval", cmd_eval},
        {"ablate", cmd_ablate},       {"sweep", cmd_sweep},         {"bench", cmd_bench}};

    common(app.add_subcommand("synth-gen", "Generate a synthetic annotation file"));
    auto* featurize = app.add_subcommand("featurize", "Split and featurize annotations into dataset files");
    common(featurize);
    featurize->add_option("--annotations", opt.annotations, "Annotation JSONL (replaces data.source)");
    common(app.add_subcommand("train", "Train and score on the test split"));
    auto* eval = app.add_subcommand("eval", "Score a checkpoint");
    common(eval);
    eval->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->required();
    eval->add_option("--data", opt.data, "Featurized dataset (.bin) instead of --config data");
    eval->add_option("--split", opt.split, "Split scored with --config data")->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_flag("--attention", opt.attention, "Export head-averaged attention maps");
    common(app.add_subcommand("ablate", "Train one model per feature subset"));
    auto* sweep = app.add_subcommand("sweep", "TTE and observation-length sweeps");
    common(sweep);
    sweep->add_option("--checkpoint", opt.checkpoint, "Score this checkpoint instead of training");
    sweep->add_option("--split", opt.split, "Split used by the TTE sweep")->check(CLI::IsMember({"train", "val", "test"}));
    auto* bench = app.add_subcommand("bench", "Single-sequence forward latency");
    common(bench);
    bench->add_option("--checkpoint", opt.checkpoint, "Checkpoint file (default: model built from --config)");
    bench->add_option("--runs", opt.runs, "Timed forwards")->check(CLI::PositiveNumber);
    bench->add_option("--warmup", opt.warmup, "Untimed forwards before timing");

    std::string command = "gtpdm";
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
        err << error_record(command, "usage", e.what()).dump() << '\n';
        return kUsage;
    }
    command = app.get_subcommands().front()->get_name();

    Context ctx{command, opt, opt.out.empty() ? fs::path("runs") / command : fs::path(opt.out), {}, out};
    ctx.manifest.command = command;
    ctx.manifest.argv = args;
    ctx.manifest.code_version = code_version();
    ctx.manifest.config = nullptr;
    const auto wall_start = std::chrono::system_clock::now();
    const auto start = std::chrono::steady_clock::now();
    ctx.manifest.started_at = utc_timestamp(wall_start);

    json failure;
    try {
        handlers.at(command)(ctx);
    } catch (const Error& e) {
        failure = error_record(command, e.kind(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        failure = error_record(command, "io", e.what());
    } catch (const std::exception& e) {
        failure = error_record(command, "internal", e.what());
    }
    ctx.manifest.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!failure.is_null()) {
        ctx.manifest.status = "error";
        ctx.manifest.error = failure["error"];
    }
    try {
        write_manifest(ctx.out / "manifest.json", ctx.manifest);
        if (failure.is_null()) out << "manifest " << (ctx.out / "manifest.json").string() << '\n';
    } catch (const std::exception& e) {
        if (failure.is_null()) failure = error_record(command, "io", e.what());
    }
    if (failure.is_null()) return kOk;
    err << failure.dump() << '\n';
    return failure["error"]["exit_code"].get<int>();
}

} // namespace gtpdm::cli
