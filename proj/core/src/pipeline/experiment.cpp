// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/pipeline/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

#include "gtpdm/errors.hpp"
#include "gtpdm/evaluation/evaluate.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::pipeline {
namespace {

using nlohmann::json;

std::string to_string(DataSource s) { return s == DataSource::Synthetic ? "synthetic" : "annotations"; }

DataSource data_source_from_string(const std::string& s) {
    if (s == "synthetic") return DataSource::Synthetic;
    if (s == "annotations") return DataSource::Annotations;
    throw ConfigError("data.source: unknown value '" + s + "', expected synthetic or annotations");
}

std::string to_string(SplitKind k) {
    switch (k) {
    case SplitKind::Id: return "id";
    case SplitKind::Set: return "set";
    case SplitKind::KFold: return "kfold";
    }
    return "id";
}

SplitKind split_kind_from_string(const std::string& s) {
    if (s == "id") return SplitKind::Id;
    if (s == "set") return SplitKind::Set;
    if (s == "kfold") return SplitKind::KFold;
    throw ConfigError("split.kind: unknown value '" + s + "', expected id, set or kfold");
}

std::string to_string(AblationMode m) { return m == AblationMode::Retrain ? "retrain" : "evaluate"; }

AblationMode ablation_mode_from_string(const std::string& s) {
    if (s == "retrain") return AblationMode::Retrain;
    if (s == "evaluate") return AblationMode::Evaluate;
    throw ConfigError("analysis.ablation_mode: unknown value '" + s + "', expected retrain or evaluate");
}

void mismatch(const std::string& what) { throw ConfigError("config mismatch: " + what); }

std::vector<std::string> split_tokens(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        out.emplace_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

void zero(Tensor& t) { t = Tensor(t.shape()); }

} // namespace

std::filesystem::path data_directory() {
    if (const char* env = std::getenv("GTPDM_DATA_DIR"); env && *env) return env;
    return GTPDM_DEFAULT_DATA_DIR;
}

std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
    return p.is_absolute() ? p : data_directory() / p;
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("name must not be empty");
    if (data.source == DataSource::Synthetic) data.scenario.validate();
    if (data.source == DataSource::Annotations && data.annotations.empty()) {
        throw ConfigError("data.annotations: required when data.source is annotations");
    }
    switch (split.kind) {
    case SplitKind::Id:
        for (double r : split.ratios) {
            if (!(r >= 0.0)) throw ConfigError("split.ratios must be non-negative");
        }
        if (split.ratios[0] <= 0.0 || split.ratios[1] <= 0.0 || split.ratios[2] <= 0.0) {
            throw ConfigError("split.ratios: train, val and test all need a positive share");
        }
        break;
    case SplitKind::Set:
        if (split.train_sets.empty() || split.val_sets.empty() || split.test_sets.empty()) {
            throw ConfigError("split: set splits need train_sets, val_sets and test_sets");
        }
        break;
    case SplitKind::KFold:
        if (split.folds < 3) throw ConfigError("split.folds must be at least 3 (test, val and train folds)");
        if (split.fold >= split.folds) {
            throw ConfigError("split.fold " + std::to_string(split.fold) + " is out of range for " +
                              std::to_string(split.folds) + " folds");
        }
        break;
    }
    features.validate();
    model.validate();
    train.validate();
    if (model.T != features.T) {
        mismatch("model.T = " + std::to_string(model.T) + " but features.T = " + std::to_string(features.T));
    }
    if (model.use_ego) {
        if (model.ego_mode != features.ego_mode) {
            mismatch("model.ego_mode = " + model::to_string(model.ego_mode) + " but features.ego_mode = " +
                     model::to_string(features.ego_mode));
        }
        if (model.ego_mode == model::EgoMode::StateOneHot && model.ego_states != features.vocabulary().size()) {
            mismatch("model.ego_states = " + std::to_string(model.ego_states) + " but the ego vocabulary has " +
                     std::to_string(features.vocabulary().size()) + " states");
        }
    }
    for (const auto& s : analysis.ablation_subsets) FeatureSubset::parse(s);
    for (std::size_t T : analysis.observation_lengths) {
        if (T < 2) throw ConfigError("analysis.observation_lengths: every length must be at least 2");
    }
}

void to_json(json& j, const ExperimentConfig& c) {
    json data{{"source", to_string(c.data.source)},
              {"scenario", c.data.scenario},
              {"annotations", c.data.annotations},
              {"skeleton_edges", c.data.skeleton_edges}};
    json split{{"kind", to_string(c.split.kind)},
               {"ratios", c.split.ratios},
               {"seed", c.split.seed},
               {"train_sets", c.split.train_sets},
               {"val_sets", c.split.val_sets},
               {"test_sets", c.split.test_sets},
               {"folds", c.split.folds},
               {"fold", c.split.fold}};
    json analysis{{"ablation_subsets", c.analysis.ablation_subsets},
                  {"ablation_mode", to_string(c.analysis.ablation_mode)},
                  {"tte_points", c.analysis.tte_points},
                  {"observation_lengths", c.analysis.observation_lengths}};
    j = json{{"name", c.name},
             {"seed", c.seed ? json(*c.seed) : json(nullptr)},
             {"data", data},
             {"split", split},
             {"features", c.features},
             {"model", c.model},
             {"train", c.train},
             {"analysis", analysis}};
}

void from_json(const json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    util::FieldReader r(j, "config");
    r.read("name", c.name);
    if (const json* s = r.get("seed"); s && !s->is_null()) {
        if (!s->is_number_integer() || (!s->is_number_unsigned() && s->get<std::int64_t>() < 0)) {
            throw ConfigError("config.seed: wrong type (" + s->dump() + ")");
        }
        c.seed = s->get<std::uint64_t>();
    }
    if (const json* d = r.get("data")) {
        util::FieldReader dr(*d, "data");
        std::string s;
        if (dr.read("source", s)) c.data.source = data_source_from_string(s);
        if (const json* sc = dr.get("scenario")) c.data.scenario = sc->get<synthetic::ScenarioParams>();
        dr.read("annotations", c.data.annotations);
        dr.read("skeleton_edges", c.data.skeleton_edges);
        dr.finish();
    }
    if (const json* sp = r.get("split")) {
        util::FieldReader sr(*sp, "split");
        std::string s;
        if (sr.read("kind", s)) c.split.kind = split_kind_from_string(s);
        sr.read("ratios", c.split.ratios);
        sr.read("seed", c.split.seed);
        sr.read("train_sets", c.split.train_sets);
        sr.read("val_sets", c.split.val_sets);
        sr.read("test_sets", c.split.test_sets);
        sr.read("folds", c.split.folds);
        sr.read("fold", c.split.fold);
        sr.finish();
    }
    if (const json* f = r.get("features")) c.features = f->get<data::FeaturizeConfig>();

    json mj = json::object();
    if (const json* m = r.get("model")) {
        if (!m->is_object()) throw ConfigError("model: expected an object");
        mj = *m;
    }
    const auto adopt = [&](const char* key, const json& v) {
        if (!mj.contains(key)) mj[key] = v;
    };
    adopt("T", c.features.T);
    adopt("ego_mode", model::to_string(c.features.ego_mode));
    if (c.features.ego_mode == model::EgoMode::StateOneHot) {
        adopt("ego_states", c.features.vocabulary().size());
        adopt("use_accel", false);
    }
    c.model = mj.get<model::ModelConfig>();

    if (const json* t = r.get("train")) c.train = t->get<training::TrainConfig>();
    if (const json* a = r.get("analysis")) {
        util::FieldReader ar(*a, "analysis");
        ar.read("ablation_subsets", c.analysis.ablation_subsets);
        std::string s;
        if (ar.read("ablation_mode", s)) c.analysis.ablation_mode = ablation_mode_from_string(s);
        ar.read("tte_points", c.analysis.tte_points);
        ar.read("observation_lengths", c.analysis.observation_lengths);
        ar.finish();
    }
    r.finish();

    if (c.seed) {
        c.data.scenario.seed = *c.seed;
        c.split.seed = *c.seed;
        c.features.balance_seed = *c.seed;
        c.train.seed = *c.seed;
    }
    c.validate();
}

void apply_override(json& config, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
    }
    const std::vector<std::string> path = split_tokens(assignment.substr(0, eq), '.');
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &config;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i].empty()) throw ConfigError("override '" + std::string(assignment) + "': empty key segment");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) {
            throw ConfigError("override '" + std::string(assignment) + "': '" + path[i - 1] + "' is not a section");
        }
        node = &(*node)[path[i]];
    }
    *node = std::move(value);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json j = read_json_file(path);
    for (const auto& o : overrides) apply_override(j, o);
    return j.get<ExperimentConfig>();
}

FeatureSubset FeatureSubset::parse(std::string_view spec) {
    FeatureSubset s;
    for (const std::string& tok : split_tokens(spec, '+')) {
        if (tok == "pe") s.pdm = s.displacement = s.velocity = true;
        else if (tok == "pdm") s.pdm = true;
        else if (tok == "d") s.displacement = true;
        else if (tok == "v") s.velocity = true;
        else if (tok == "ev") s.ego = true;
        else if (tok == "ke") s.pose = true;
        else throw ConfigError("feature subset '" + std::string(spec) + "': unknown token '" + tok +
                               "' (expected pe, pdm, d, v, ev, ke)");
    }
    if (!s.position() && !s.ego && !s.pose) {
        throw ConfigError("feature subset '" + std::string(spec) + "' disables every encoder");
    }
    return s;
}

FeatureSubset FeatureSubset::of(const model::ModelConfig& cfg) {
    FeatureSubset s;
    s.pdm = cfg.use_position && cfg.use_pdm;
    s.displacement = cfg.use_position && cfg.use_displacement;
    s.velocity = cfg.use_position && cfg.use_velocity;
    s.ego = cfg.use_ego;
    s.pose = cfg.use_pose;
    return s;
}

std::string FeatureSubset::key() const {
    std::vector<std::string> parts;
    if (pdm && displacement && velocity) {
        parts.emplace_back("pe");
    } else {
        if (pdm) parts.emplace_back("pdm");
        if (displacement) parts.emplace_back("d");
        if (velocity) parts.emplace_back("v");
    }
    if (ego) parts.emplace_back("ev");
    if (pose) parts.emplace_back("ke");
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
    return out;
}

void FeatureSubset::apply(model::ModelConfig& cfg) const {
    cfg.use_position = position();
    cfg.use_pdm = pdm;
    cfg.use_displacement = displacement;
    cfg.use_velocity = velocity;
    cfg.use_ego = ego;
    cfg.use_pose = pose;
}

bool FeatureSubset::subset_of(const FeatureSubset& o) const noexcept {
    return (!pdm || o.pdm) && (!displacement || o.displacement) && (!velocity || o.velocity) && (!ego || o.ego) &&
           (!pose || o.pose);
}

data::Dataset mask_features(const data::Dataset& d, const FeatureSubset& s) {
    data::Dataset out = d;
    for (auto& w : out.windows) {
        if (!s.pdm) zero(w.pdm);
        if (!s.displacement) zero(w.displacement);
        if (!s.velocity) zero(w.velocity);
        if (!s.ego) {
            zero(w.ego);
            zero(w.accel);
        }
        if (!s.pose) zero(w.keypoints);
    }
    return out;
}

std::vector<data::AnnotationRecord> load_records(const ExperimentConfig& cfg) {
    if (cfg.data.source == DataSource::Synthetic) return synthetic::generate(cfg.data.scenario).records;
    return data::load_annotations(resolve_data_path(cfg.data.annotations));
}

features::SkeletonGraph load_graph(const ExperimentConfig& cfg) {
    if (cfg.data.skeleton_edges.empty()) {
        return features::build_normalized_adjacency(features::default_skeleton_edges(), features::kJointCount);
    }
    const auto edges = features::load_edge_list(resolve_data_path(cfg.data.skeleton_edges));
    return features::build_normalized_adjacency(edges, cfg.model.joints);
}

data::SplitSpec make_split(const std::vector<data::AnnotationRecord>& records, const SplitConfig& cfg) {
    switch (cfg.kind) {
    case SplitKind::Id: return data::split_by_id(records, cfg.ratios, cfg.seed);
    case SplitKind::Set: return data::split_by_set(records, cfg.train_sets, cfg.val_sets, cfg.test_sets);
    case SplitKind::KFold: break;
    }
    const std::vector<data::SplitSpec> folds = data::kfold_split(records, cfg.folds, cfg.seed);
    data::SplitSpec s = folds.at(cfg.fold);
    s.val = folds[(cfg.fold + 1) % cfg.folds].test;
    const std::set<std::string> val(s.val.begin(), s.val.end());
    std::erase_if(s.train, [&](const std::string& id) { return val.count(id) > 0; });
    return s;
}

PreparedData prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    PreparedData p;
    const std::vector<data::AnnotationRecord> records = load_records(cfg);
    p.split = make_split(records, cfg.split);
    p.records = data::apply_split(records, p.split);
    if (p.records.train.empty()) throw ValidationError("split '" + p.split.name + "' leaves no training records");

    p.features = cfg.features;
    if (!p.features.y_min) p.features.y_min = data::min_center_y(p.records.train);
    p.train = data::featurize(p.records.train, p.features);
    data::FeaturizeConfig held_out = p.features;
    held_out.balance = false;
    p.val = data::featurize(p.records.val, held_out);
    p.test = data::featurize(p.records.test, held_out);
    return p;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data, const RunOptions& opts) {
    cfg.validate();
    ExperimentResult r;
    r.features = data.features;
    r.model = std::make_unique<model::GTransPDM>(cfg.model, load_graph(cfg), cfg.train.seed);
    training::TrainOptions to;
    to.on_epoch = opts.on_epoch;
    to.checkpoint_dir = opts.checkpoint_dir;
    to.meta = {data.features, cfg.train};
    r.state = training::train(*r.model, data.train, data.val, cfg.train, to);
    training::apply_selection(*r.model, r.state, cfg.train);
    if (data.test.size() == 0) throw ValidationError("test split has no windows");
    r.test = evaluation::evaluate(*r.model, data.test);
    r.test.key = cfg.name;
    return r;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    return run_experiment(cfg, prepare(cfg), opts);
}

std::vector<AblationRow> ablate_features(const ExperimentConfig& cfg, const std::vector<std::string>& subsets,
                                         AblationMode mode) {
    if (subsets.empty()) throw ConfigError("ablation: no feature subsets requested");
    std::vector<FeatureSubset> parsed;
    for (const auto& s : subsets) parsed.push_back(FeatureSubset::parse(s));
    const PreparedData data = prepare(cfg);
    std::vector<AblationRow> rows;

    if (mode == AblationMode::Retrain) {
        for (const FeatureSubset& s : parsed) {
            ExperimentConfig c = cfg;
            s.apply(c.model);
            ExperimentResult r = run_experiment(c, data);
            r.test.key = s.key();
            rows.push_back({s, r.test});
        }
        return rows;
    }

    const FeatureSubset full = FeatureSubset::of(cfg.model);
    for (const FeatureSubset& s : parsed) {
        if (!s.subset_of(full)) {
            throw ConfigError("ablation subset '" + s.key() + "' uses streams the trained model '" + full.key() +
                              "' lacks");
        }
    }
    ExperimentResult r = run_experiment(cfg, data);
    for (const FeatureSubset& s : parsed) {
        evaluation::MetricsReport m = evaluation::evaluate(*r.model, mask_features(data.test, s));
        m.key = s.key();
        rows.push_back({s, m});
    }
    return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
    const auto prev = out.precision(10);
    out << "key,pe,pdm,d,v,ev,ke,samples,accuracy,auc,f1,precision,recall\n";
    for (const auto& row : rows) {
        const FeatureSubset& s = row.subset;
        const auto& m = row.metrics;
        out << m.key << ',' << s.position() << ',' << s.pdm << ',' << s.displacement << ',' << s.velocity << ','
            << s.ego << ',' << s.pose << ',' << m.samples << ',' << m.accuracy << ',' << m.auc << ',' << m.f1 << ','
            << m.precision << ',' << m.recall << '\n';
    }
    out.precision(prev);
}

std::vector<evaluation::MetricsReport> sweep_observation_length(const ExperimentConfig& cfg,
                                                                const std::vector<std::size_t>& lengths) {
    if (lengths.empty()) throw ConfigError("observation-length sweep: no lengths requested");
    std::vector<evaluation::MetricsReport> out;
    for (std::size_t T : lengths) {
        ExperimentConfig c = cfg;
        c.features.T = T;
        c.model.T = T;
        ExperimentResult r = run_experiment(c);
        r.test.key = "T=" + std::to_string(T);
        out.push_back(r.test);
    }
    return out;
}

} // namespace gtpdm::pipeline
