// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/evaluation/analysis.hpp"
#include "gtpdm/pipeline/experiment.hpp"

using namespace gtpdm;
using namespace gtpdm::pipeline;
using nlohmann::json;

namespace {

ExperimentConfig tiny_experiment(std::size_t tracks = 24) {
    ExperimentConfig c;
    c.name = "tiny";
    c.data.scenario.crossing_tracks = tracks;
    c.data.scenario.non_crossing_tracks = tracks;
    c.model.channels = 8;
    c.model.gcn_hidden = 8;
    c.model.gcn_layers = 1;
    c.model.heads = 2;
    c.model.layers = 1;
    c.model.ff_dim = 8;
    c.train.epochs = 2;
    c.train.batch_size = 16;
    c.train.lr = 1e-3;
    c.features.balance = true;
    return c;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("experiment config round-trips through JSON") {
    ExperimentConfig c = tiny_experiment();
    c.split.kind = SplitKind::KFold;
    c.split.fold = 2;
    c.analysis.ablation_subsets = {"pe", "d+v+ev"};
    c.analysis.tte_points = {0, 30};
    c.features.ego_vocabulary = c.features.vocabulary();
    const ExperimentConfig back = json(c).get<ExperimentConfig>();
    CHECK(back == c);
}

TEST_CASE("model window length and ego mode follow the features section") {
    const json j{{"features", {{"T", 8}, {"ego_mode", "state_onehot"}}}, {"model", {{"channels", 8}, {"heads", 2}}}};
    const ExperimentConfig c = j.get<ExperimentConfig>();
    CHECK(c.model.T == 8);
    CHECK(c.model.ego_mode == model::EgoMode::StateOneHot);
    CHECK(c.model.ego_states == c.features.vocabulary().size());
    CHECK_FALSE(c.model.use_accel);

    const json conflict{{"features", {{"T", 8}}}, {"model", {{"T", 16}}}};
    CHECK_THROWS_WITH_AS(conflict.get<ExperimentConfig>(), doctest::Contains("config mismatch"), ConfigError);
}

TEST_CASE("top-level seed replaces every stream seed") {
    const json j{{"seed", 42}, {"train", {{"seed", 3}}}};
    const ExperimentConfig c = j.get<ExperimentConfig>();
    CHECK(c.data.scenario.seed == 42);
    CHECK(c.split.seed == 42);
    CHECK(c.features.balance_seed == 42);
    CHECK(c.train.seed == 42);
}

TEST_CASE("overrides address nested keys and parse JSON values") {
    json j = json::object();
    apply_override(j, "train.lr=5e-4");
    apply_override(j, "name=run-a");
    apply_override(j, "features.tte=[0,60]");
    apply_override(j, "features.balance=true");
    CHECK(j["train"]["lr"] == 5e-4);
    CHECK(j["name"] == "run-a");
    CHECK(j["features"]["tte"] == json::array({0, 60}));
    CHECK(j["features"]["balance"] == true);
    const ExperimentConfig c = j.get<ExperimentConfig>();
    CHECK(c.train.lr == 5e-4);

    CHECK_THROWS_AS(apply_override(j, "no-equals"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "name.inner=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "train..lr=1"), ConfigError);
    json unknown = json::object();
    apply_override(unknown, "train.learning_rate=1");
    CHECK_THROWS_WITH_AS(unknown.get<ExperimentConfig>(), doctest::Contains("unknown key"), ConfigError);
}

TEST_CASE("feature subsets parse into canonical keys") {
    CHECK(FeatureSubset::parse("pe").key() == "pe");
    CHECK(FeatureSubset::parse("pdm+d+v").key() == "pe");
    CHECK(FeatureSubset::parse("ke+ev+pe").key() == "pe+ev+ke");
    CHECK(FeatureSubset::parse("d+v+ev+ke").key() == "d+v+ev+ke");
    const FeatureSubset dv = FeatureSubset::parse("d+v");
    CHECK_FALSE(dv.pdm);
    CHECK(dv.position());
    model::ModelConfig m;
    dv.apply(m);
    CHECK(m.use_position);
    CHECK_FALSE(m.use_pdm);
    CHECK_FALSE(m.use_ego);
    CHECK_FALSE(m.use_pose);
    CHECK(FeatureSubset::of(m) == dv);
    CHECK(dv.subset_of(FeatureSubset::parse("pe")));
    CHECK_FALSE(FeatureSubset::parse("ev").subset_of(dv));
    CHECK_THROWS_WITH_AS(FeatureSubset::parse(""), doctest::Contains("unknown token"), ConfigError);
    CHECK_THROWS_AS(FeatureSubset::parse("pe+xyz"), ConfigError);
}

TEST_CASE("k-fold splits hold out disjoint test and validation folds") {
    ExperimentConfig c = tiny_experiment(10);
    c.split.kind = SplitKind::KFold;
    const auto records = load_records(c);
    std::set<std::string> tested;
    for (std::size_t f = 0; f < c.split.folds; ++f) {
        c.split.fold = f;
        const data::SplitSpec s = make_split(records, c.split);
        s.validate();
        CHECK(s.size() == 20);
        CHECK_FALSE(s.val.empty());
        for (const auto& id : s.test) CHECK(tested.insert(id).second);
    }
    CHECK(tested.size() == 20);
    c.split.fold = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("preparation balances only the training split") {
    const ExperimentConfig c = tiny_experiment();
    const PreparedData p = prepare(c);
    CHECK(p.features.y_min.has_value());
    CHECK(*p.features.y_min == data::min_center_y(p.records.train));
    CHECK(2 * p.train.positives() == p.train.size());
    CHECK(p.test.size() > 0);
    CHECK(p.val.size() > 0);
    data::FeaturizeConfig unbalanced = p.features;
    unbalanced.balance = false;
    CHECK(p.test == data::featurize(p.records.test, unbalanced));
    CHECK(as_set(data::pedestrian_ids(p.records.train)).size() == p.split.train.size());
}

TEST_CASE("missing annotation files and empty subsets fail cleanly") {
    ExperimentConfig c = tiny_experiment();
    c.data.source = DataSource::Annotations;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.data.annotations = "/nonexistent/annotations.jsonl";
    CHECK_THROWS_AS(load_records(c), IoError);
    CHECK_THROWS_AS(ablate_features(tiny_experiment(), {}), ConfigError);
    CHECK_THROWS_AS(ablate_features(tiny_experiment(), {"pe", "bogus"}), ConfigError);
}

TEST_CASE("relative data paths resolve under the data directory") {
    CHECK(resolve_data_path("/abs/file") == "/abs/file");
    ::setenv("GTPDM_DATA_DIR", "/tmp/gtpdm-data", 1);
    CHECK(data_directory() == "/tmp/gtpdm-data");
    CHECK(resolve_data_path("pie/a.jsonl") == "/tmp/gtpdm-data/pie/a.jsonl");
    ::unsetenv("GTPDM_DATA_DIR");
    CHECK(data_directory() != "/tmp/gtpdm-data");
}

TEST_CASE("identical experiments give identical results") {
    const ExperimentConfig c = tiny_experiment();
    const ExperimentResult a = run_experiment(c);
    const ExperimentResult b = run_experiment(c);
    CHECK(a.state.history.epochs == b.state.history.epochs);
    CHECK(a.test == b.test);
    CHECK(a.test.key == "tiny");
    CHECK(a.state.history.epochs.size() == 2);
}

TEST_CASE("ablation yields one row per subset in request order") {
    ExperimentConfig c = tiny_experiment(12);
    c.train.epochs = 1;
    const std::vector<std::string> subsets{"pe", "pe+ev+ke", "d+v"};
    const auto rows = ablate_features(c, subsets);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].metrics.key == "pe");
    CHECK(rows[1].metrics.key == "pe+ev+ke");
    CHECK(rows[2].metrics.key == "d+v");
    CHECK(rows[0].metrics.samples == rows[2].metrics.samples);

    std::ostringstream out;
    write_ablation_csv(out, rows);
    const std::string text = out.str();
    CHECK(text.rfind("key,pe,pdm,d,v,ev,ke,", 0) == 0);
    CHECK(text.find("\nd+v,1,0,1,1,0,0,") != std::string::npos);

    const auto masked = ablate_features(c, {"pe+ev+ke", "d+v"}, AblationMode::Evaluate);
    REQUIRE(masked.size() == 2);
    c.model.use_pose = false;
    CHECK_THROWS_AS(ablate_features(c, {"pe+ke"}, AblationMode::Evaluate), ConfigError);
}

TEST_CASE("masking zeroes exactly the left-out streams") {
    const PreparedData p = prepare(tiny_experiment(6));
    const data::Dataset m = mask_features(p.test, FeatureSubset::parse("d+ke"));
    REQUIRE(m.size() == p.test.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m.windows[i].displacement == p.test.windows[i].displacement);
        CHECK(m.windows[i].keypoints == p.test.windows[i].keypoints);
        CHECK(m.windows[i].pdm == Tensor(p.test.windows[i].pdm.shape()));
        CHECK(m.windows[i].velocity == Tensor(p.test.windows[i].velocity.shape()));
        CHECK(m.windows[i].ego == Tensor(p.test.windows[i].ego.shape()));
    }
}

TEST_CASE("observation-length sweep retrains at each window length") {
    ExperimentConfig c = tiny_experiment(8);
    c.train.epochs = 1;
    const auto reports = sweep_observation_length(c, {8, 12});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].key == "T=8");
    CHECK(reports[1].key == "T=12");
    CHECK(reports[0].samples != reports[1].samples);
}

TEST_CASE("on separable synthetic data the latest windows score best") {
    ExperimentConfig c = tiny_experiment(60);
    c.model.use_ego = false;
    c.model.use_pose = false;
    c.model.channels = 16;
    c.model.heads = 2;
    c.model.layers = 1;
    c.train.epochs = 12;
    c.train.batch_size = 16;
    c.data.scenario.pan_amplitude = 0.0;
    c.data.scenario.pan_drift = 0.0;
    c.features.tte = {0, 60};
    const PreparedData p = prepare(c);
    ExperimentResult r = run_experiment(c, p);
    const auto sweep = evaluation::sweep_tte(*r.model, p.records.test, p.features, *p.features.y_min, {0, 20, 40, 60});
    REQUIRE(sweep.size() == 4);
    // non-crossing windows are shared by every point, so compare on the crossing ones
    for (const auto& s : sweep) {
        CAPTURE(s.key);
        CHECK(s.tp + s.fn > 0);
        CHECK(sweep[0].recall >= s.recall);
    }
}

} // TEST_SUITE
