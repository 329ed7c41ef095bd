// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/evaluation/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/evaluation/evaluate.hpp"

namespace gtpdm::evaluation {

std::vector<MetricsReport> sweep_tte(model::GTransPDM& model, const std::vector<data::AnnotationRecord>& records,
                                     const data::FeaturizeConfig& features, double y_min,
                                     std::vector<std::int64_t> tte_points) {
    if (tte_points.empty()) throw ConfigError("sweep_tte: no TTE points");
    std::sort(tte_points.begin(), tte_points.end());
    tte_points.erase(std::unique(tte_points.begin(), tte_points.end()), tte_points.end());
    std::vector<MetricsReport> out;
    for (std::int64_t t : tte_points) {
        data::FeaturizeConfig cfg = features;
        cfg.tte = {t, t};
        cfg.balance = false;
        cfg.validate();
        const data::Dataset d = data::featurize(records, cfg, y_min);
        const std::string key = "tte=" + std::to_string(t);
        if (d.size() == 0) {
            out.push_back(empty_report(key));
            continue;
        }
        MetricsReport r = evaluate(model, d);
        r.key = key;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Tensor> export_attention(model::GTransPDM& model, const model::ModelInput& batch) {
    const model::Prediction p = model.predict(batch, true);
    std::vector<Tensor> out;
    for (const Tensor& layer : p.attention) {
        const std::size_t B = layer.shape()[0], T = layer.shape()[1];
        Tensor m(Shape{T, T});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t k = 0; k < T * T; ++k) m[k] += layer[b * T * T + k];
        }
        for (std::size_t k = 0; k < T * T; ++k) m[k] /= static_cast<double>(B);
        out.push_back(std::move(m));
    }
    return out;
}

void write_attention_grid(std::ostream& out, std::span<const Tensor> maps) {
    const auto prev = out.precision(10);
    for (std::size_t l = 0; l < maps.size(); ++l) {
        const std::size_t T = maps[l].shape()[0];
        out << "# layer " << l << '\n';
        for (std::size_t i = 0; i < T; ++i) {
            for (std::size_t j = 0; j < T; ++j) out << (j ? " " : "") << maps[l].at(i, j);
            out << '\n';
        }
    }
    out.precision(prev);
}

void to_json(nlohmann::json& j, const LatencyStats& s) {
    j = nlohmann::json{{"runs", s.runs},        {"warmup", s.warmup},   {"median_ms", s.median_ms},
                       {"p95_ms", s.p95_ms},    {"mean_ms", s.mean_ms}, {"min_ms", s.min_ms},
                       {"parameters", s.parameters}, {"hardware", s.hardware}};
}

LatencyStats benchmark_latency(model::GTransPDM& model, const model::ModelInput& sample, std::size_t runs,
                               std::size_t warmup) {
    if (runs < 1) throw ConfigError("benchmark_latency: runs must be at least 1");
    if (sample.batch != 1) {
        throw ConfigError("benchmark_latency: expected a single sequence, got a batch of " + std::to_string(sample.batch));
    }
    for (std::size_t i = 0; i < warmup; ++i) model.predict(sample);
    std::vector<double> ms(runs);
    for (double& t : ms) {
        const auto start = std::chrono::steady_clock::now();
        model.predict(sample);
        t = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    LatencyStats s;
    s.runs = runs;
    s.warmup = warmup;
    s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(runs);
    std::sort(ms.begin(), ms.end());
    s.min_ms = ms.front();
    s.median_ms = runs % 2 ? ms[runs / 2] : 0.5 * (ms[runs / 2 - 1] + ms[runs / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(runs)));
    s.p95_ms = ms[std::max<std::size_t>(rank, 1) - 1];
    s.parameters = model.parameter_count();
    s.hardware = hardware_description();
    return s;
}

std::string hardware_description() {
    std::string cpu = "unknown cpu";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
            break;
        }
    }
    return cpu + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + " logical cores";
}

} // namespace gtpdm::evaluation
