// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "gtpdm/errors.hpp"
#include "gtpdm/tensor/grad_check.hpp"
#include "model_fixtures.hpp"

using namespace gtpdm;
using namespace gtpdm::model;
using gtpdm::test::default_graph;
using gtpdm::test::random_input;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.T = 4;
    c.channels = 8;
    c.gcn_hidden = 6;
    c.heads = 2;
    c.layers = 2;
    c.ff_dim = 8;
    return c;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("parameter budget with and without the pose branch") {
    GTransPDM full(ModelConfig{}, default_graph(), 1);
    ModelConfig np;
    np.use_pose = false;
    GTransPDM nopose(np, default_graph(), 1);
    MESSAGE("full " << full.parameter_count() << ", no pose " << nopose.parameter_count());
    CHECK(full.parameter_count() == 245434);
    CHECK(nopose.parameter_count() == 132674);
    CHECK(full.parameter_count() - nopose.parameter_count() == full.skeleton_branch_count());
    CHECK(std::abs(full.parameter_count() / 230000.0 - 1.0) <= 0.25);
    CHECK(std::abs(nopose.parameter_count() / 130000.0 - 1.0) <= 0.25);
    // encoder-level breakdown
    CHECK(full.parameters().count(ParamGroup::Position) == 12992);
    CHECK(full.parameters().count(ParamGroup::Ego) == 8512);
    CHECK(full.parameters().count(ParamGroup::Skeleton) == 108664);
    CHECK(full.parameters().count(ParamGroup::Fusion) == 12352);
    CHECK(full.parameters().count(ParamGroup::Transformer) == 100864);
    CHECK(full.parameters().count(ParamGroup::Head) == 2050);
}

TEST_CASE("encoder shapes follow the config") {
    GTransPDM m(ModelConfig{}, default_graph(), 3);
    const ModelInput in = random_input(m.config(), 2, 5);
    Tape tape(false);
    CHECK(m.positional_encoder(tape, in).shape() == Shape{2, 16, 64});
    CHECK(m.ego_encoder(tape, in).shape() == Shape{2, 16, 64});
    CHECK(m.skeleton_encoder(tape, in, false).shape() == Shape{2, 16, 64});
    CHECK(m.parameters().get("fusion.weight").value.shape() == Shape{192, 64});
    CHECK(m.parameters().get("skeleton.project.weight").value.shape() == Shape{1280, 64});
    CHECK(m.parameters().get("head.weight").value.shape() == Shape{1024, 2});
    const auto r = m.forward(tape, in, {false, nullptr, true});
    CHECK(r.probabilities.shape() == Shape{2, 2});
    REQUIRE(r.attention.size() == 4);
    for (const auto& a : r.attention) CHECK(a.shape() == Shape{2, 16, 16});
}

TEST_CASE("zero inputs with zero biases encode to zero") {
    GTransPDM m(ModelConfig{}, default_graph(), 3);
    ModelInput in = random_input(m.config(), 1, 5);
    in.pdm.fill(0);
    in.displacement.fill(0);
    in.velocity.fill(0);
    in.ego.fill(0);
    in.accel.fill(0);
    Tape tape(false);
    for (double v : m.positional_encoder(tape, in).value().values()) CHECK(v == 0.0);
    for (double v : m.ego_encoder(tape, in).value().values()) CHECK(v == 0.0);
}

TEST_CASE("ablated encoders shrink the fusion width") {
    ModelConfig c;
    c.use_ego = false;
    c.use_pose = false;
    GTransPDM m(c, default_graph(), 1);
    CHECK(m.parameters().get("fusion.weight").value.shape() == Shape{64, 64});
    c.use_pdm = false;
    GTransPDM dv(c, default_graph(), 1);
    CHECK(dv.parameters().get("position.fuse.weight").value.shape() == Shape{128, 64});
    CHECK_FALSE(dv.parameters().contains("position.pdm.weight"));
    c.use_position = false;
    CHECK_THROWS_AS(GTransPDM(c, default_graph(), 1), ConfigError);
    ModelConfig bad;
    bad.heads = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("state one-hot ego mode consumes five channels") {
    ModelConfig c;
    c.ego_mode = EgoMode::StateOneHot;
    c.use_accel = false;
    GTransPDM m(c, default_graph(), 2);
    CHECK(m.parameters().get("ego.state.weight").value.shape() == Shape{5, 64});
    CHECK_FALSE(m.parameters().contains("ego.accel.weight"));
    ModelInput in = random_input(c, 2, 3);
    const auto p = m.predict(in);
    CHECK(p.probabilities.shape() == Shape{2, 2});
    in.ego = Tensor(Shape{2, 16, 1});
    CHECK_THROWS_AS(m.predict(in), DimensionError);
}

TEST_CASE("predictions are probabilities and eval forward is deterministic") {
    GTransPDM m(ModelConfig{}, default_graph(), 7);
    const ModelInput in = random_input(m.config(), 3, 9);
    const auto a = m.predict(in, true);
    const auto b = m.predict(in, true);
    CHECK(a.probabilities == b.probabilities);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.cross(i) > 0.0);
        CHECK(a.cross(i) < 1.0);
        CHECK(std::abs(a.probabilities.at(i, 0) + a.probabilities.at(i, 1) - 1.0) < 1e-9);
    }
    for (const auto& att : a.attention) {
        for (std::size_t r = 0; r < att.size() / 16; ++r) {
            double s = 0;
            for (std::size_t c = 0; c < 16; ++c) s += att[r * 16 + c];
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("unit edge masks reproduce the fixed-edge graph bitwise") {
    ModelConfig fixed;
    fixed.learnable_edges = false;
    GTransPDM learn(ModelConfig{}, default_graph(), 11);
    GTransPDM plain(fixed, default_graph(), 11);
    learn.set_edges_trainable(false);
    const ModelInput in = random_input(learn.config(), 4, 2);
    CHECK(learn.predict(in).probabilities == plain.predict(in).probabilities);
    CHECK(learn.parameter_count() - plain.parameter_count() == 4 * 20 * 20);
}

TEST_CASE("single-node graph reduces each block to dense maps") {
    ModelConfig c = small_config();
    c.joints = 1;
    c.use_position = false;
    c.use_ego = false;
    GTransPDM m(c, features::build_normalized_adjacency({}, 1), 4);
    const ModelInput in = random_input(c, 2, 8);
    Tape tape(false);
    const Tensor got = m.skeleton_encoder(tape, in, false).value();

    // independent evaluation: eval batch norm with unit stats, A = 1
    const auto& P = m.parameters();
    const std::size_t B = 2, T = c.T, J = 3, D = c.gcn_hidden, C = c.channels;
    const double s = 1.0 / std::sqrt(1.0 + ops::kNormEps);
    Tensor want(Shape{B, T, C});
    for (std::size_t bt = 0; bt < B * T; ++bt) {
        std::vector<double> h(D, 0.0);
        for (std::size_t d = 0; d < D; ++d) {
            double acc = 0.0;
            for (std::size_t j = 0; j < J; ++j) acc += in.keypoints[bt * J + j] * s * P.get("skeleton.gcn0.weight").value.at(j, d);
            h[d] = std::max(0.0, acc);
        }
        for (std::size_t l = 1; l < c.gcn_layers; ++l) {
            const auto& w = P.get("skeleton.gcn" + std::to_string(l) + ".weight").value;
            const auto& wc = P.get("skeleton.gcn" + std::to_string(l) + ".residual.weight").value;
            const auto& bc = P.get("skeleton.gcn" + std::to_string(l) + ".residual.bias").value;
            std::vector<double> nh(D);
            for (std::size_t d = 0; d < D; ++d) {
                double a = 0.0, r = bc[d];
                for (std::size_t k = 0; k < D; ++k) {
                    a += h[k] * w.at(k, d);
                    r += h[k] * wc.at(k, d);
                }
                nh[d] = std::max(0.0, a + r);
            }
            h = nh;
        }
        const auto& wp = P.get("skeleton.project.weight").value;
        for (std::size_t o = 0; o < C; ++o) {
            double acc = P.get("skeleton.project.bias").value[o];
            for (std::size_t d = 0; d < D; ++d) acc += h[d] * wp.at(d, o);
            want[bt * C + o] = acc;
        }
    }
    CHECK(gtpdm::test::max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("without positional encoding the temporal encoder is permutation equivariant") {
    ModelConfig c;
    c.positional_encoding = false;
    GTransPDM m(c, default_graph(), 5);
    const Tensor x = gtpdm::test::random_tensor({2, 16, 64}, 77);
    std::array<std::size_t, 16> perm{};
    for (std::size_t t = 0; t < 16; ++t) perm[t] = (t * 5 + 3) % 16;
    Tensor xp(x.shape());
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 16; ++t)
            for (std::size_t ch = 0; ch < 64; ++ch) xp[(b * 16 + t) * 64 + ch] = x[(b * 16 + perm[t]) * 64 + ch];
    Tape tape(false);
    const Tensor y = m.transformer_encode(tape, tape.constant(x), {}, nullptr).value();
    const Tensor yp = m.transformer_encode(tape, tape.constant(xp), {}, nullptr).value();
    double err = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 16; ++t)
            for (std::size_t ch = 0; ch < 64; ++ch)
                err = std::max(err, std::abs(yp[(b * 16 + t) * 64 + ch] - y[(b * 16 + perm[t]) * 64 + ch]));
    CHECK(err < 1e-12);
}

TEST_CASE("sinusoidal encoding interleaves sine and cosine") {
    const Tensor pe = TransformerEncoder::sinusoidal_encoding(16, 64);
    CHECK(pe.at(0, 0) == 0.0);
    CHECK(pe.at(0, 1) == 1.0);
    CHECK(pe.at(3, 0) == doctest::Approx(std::sin(3.0)));
    CHECK(pe.at(3, 1) == doctest::Approx(std::cos(3.0)));
    CHECK(pe.at(5, 10) == doctest::Approx(std::sin(5.0 / std::pow(10000.0, 10.0 / 64))));
    CHECK(pe.at(5, 11) == doctest::Approx(std::cos(5.0 / std::pow(10000.0, 10.0 / 64))));
}

TEST_CASE("end-to-end gradient matches finite differences") {
    ModelConfig c = small_config();
    GTransPDM m(c, default_graph(), 21);
    gtpdm::test::jitter_parameters(m, 5);
    const ModelInput in = random_input(c, 3, 4);
    GradCheckOptions opt;
    opt.scale_floor = 1e-6;
    opt.max_entries_per_param = 12;
    const auto report = grad_check(
        [&](Tape& t) {
            CounterRng rng(99);
            return m.loss(t, in, {true, &rng, false});
        },
        m.parameters().all(), opt);
    for (const auto& e : report.params) {
        INFO(e.name << " " << e.max_relative_error << " scale " << e.gradient_scale);
        CHECK(e.max_relative_error < 1e-4);
    }
}

TEST_CASE("training-mode forward without an rng is rejected") {
    GTransPDM m(small_config(), default_graph(), 1);
    Tape tape(true);
    CHECK_THROWS_AS(m.loss(tape, random_input(m.config(), 2, 1), {true, nullptr, false}), ConfigError);
}

TEST_CASE("model config json round trip") {
    ModelConfig c;
    c.ff_dim = 96;
    c.use_pdm = false;
    c.ego_mode = EgoMode::StateOneHot;
    nlohmann::json j = c;
    CHECK(j.get<ModelConfig>() == c);
    j["bogus"] = 1;
    CHECK_THROWS_AS(j.get<ModelConfig>(), ConfigError);
    nlohmann::json k = {{"ff_dim", "big"}};
    CHECK_THROWS_AS(k.get<ModelConfig>(), ConfigError);
}

} // TEST_SUITE
