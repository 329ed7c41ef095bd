// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "gtpdm/features/skeleton.hpp"
#include "gtpdm/model/gtranspdm.hpp"
#include "gtpdm/tensor/ops.hpp"
#include "gtpdm/tensor/rng.hpp"
#include "gtpdm/tensor/tape.hpp"

namespace {

using namespace gtpdm;

Tensor uniform(Shape shape, CounterRng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

model::ModelInput sample(const model::ModelConfig& cfg, std::size_t B) {
    CounterRng rng(11);
    model::ModelInput in;
    in.batch = B;
    in.pdm = uniform({B, cfg.T, 3}, rng, -1, 1);
    in.displacement = uniform({B, cfg.T, 2}, rng, -20, 20);
    in.velocity = uniform({B, cfg.T, 2}, rng, -3, 3);
    in.ego = uniform({B, cfg.T, 1}, rng, 0, 40);
    in.accel = uniform({B, cfg.T, 1}, rng, -2, 2);
    in.keypoints = uniform({B, cfg.T, cfg.joints, cfg.joint_channels}, rng, 0, 60);
    in.labels.assign(B, 0);
    return in;
}

model::GTransPDM make_model(bool pose) {
    model::ModelConfig cfg;
    cfg.use_pose = pose;
    return model::GTransPDM(cfg, features::build_normalized_adjacency(features::default_skeleton_edges(), cfg.joints), 1);
}

void BM_EvalForward(benchmark::State& state) {
    model::GTransPDM m = make_model(state.range(1) != 0);
    const model::ModelInput in = sample(m.config(), static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(m.predict(in));
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["params"] = static_cast<double>(m.parameter_count());
}
BENCHMARK(BM_EvalForward)->ArgsProduct({{1, 32, 128}, {1, 0}})->ArgNames({"batch", "pose"})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    model::GTransPDM m = make_model(true);
    const model::ModelInput in = sample(m.config(), static_cast<std::size_t>(state.range(0)));
    CounterRng rng(3);
    for (auto _ : state) {
        m.parameters().zero_grad();
        Tape tape;
        model::ForwardOptions fo;
        fo.training = true;
        fo.rng = &rng;
        Var loss = m.loss(tape, in, fo);
        tape.backward(loss);
        benchmark::DoNotOptimize(loss.value()[0]);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128)->ArgName("batch")->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    CounterRng rng(5);
    const Tensor a = uniform({n, n}, rng, -1, 1), b = uniform({n, n}, rng, -1, 1);
    for (auto _ : state) {
        Tape tape;
        benchmark::DoNotOptimize(ops::matmul(tape.constant(a), tape.constant(b)).value()[0]);
    }
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

} // namespace

BENCHMARK_MAIN();
