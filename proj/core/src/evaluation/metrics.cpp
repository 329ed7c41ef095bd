// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"

namespace gtpdm::evaluation {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.empty()) throw ValidationError("metrics: empty input");
    if (scores.size() != labels.size()) {
        throw DimensionError("metrics: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                             " labels");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ValidationError("metrics: label " + std::to_string(i) + " is " + std::to_string(labels[i]) +
                                  ", expected 0 or 1");
        }
        if (!std::isfinite(scores[i])) throw NumericError("metrics: score " + std::to_string(i) + " is not finite");
    }
}

double ratio(std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MetricsReport empty_report(std::string key) {
    MetricsReport r;
    r.key = std::move(key);
    r.flags = {true, true, true, true, true};
    return r;
}

double rank_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the rank sum keeps tied (half-integer) ranks integral.
    std::uint64_t twice_rank_sum = 0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t twice_rank = i + j + 1;  // mean of ranks i+1 .. j, doubled
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                twice_rank_sum += twice_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return 0.0;
    const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(positives) * (positives + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_inputs(scores, labels);
    MetricsReport r;
    r.samples = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        if (labels[i] == 1) (predicted ? r.tp : r.fn)++;
        else (predicted ? r.fp : r.tn)++;
    }
    bool unused = false;
    r.accuracy = ratio(r.tp + r.tn, r.samples, unused);
    r.precision = ratio(r.tp, r.tp + r.fp, r.flags.precision_undefined);
    r.recall = ratio(r.tp, r.tp + r.fn, r.flags.recall_undefined);
    r.f1 = ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn, r.flags.f1_undefined);
    r.flags.auc_undefined = r.tp + r.fn == 0 || r.tn + r.fp == 0;
    r.auc = r.flags.auc_undefined ? 0.0 : rank_auc(scores, labels);
    return r;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"key", r.key},
                       {"samples", r.samples},
                       {"accuracy", r.accuracy},
                       {"auc", r.auc},
                       {"f1", r.f1},
                       {"precision", r.precision},
                       {"recall", r.recall},
                       {"tp", r.tp},
                       {"fp", r.fp},
                       {"tn", r.tn},
                       {"fn", r.fn}};
    nlohmann::json flags = nlohmann::json::array();
    if (r.flags.auc_undefined) flags.push_back("auc_undefined");
    if (r.flags.precision_undefined) flags.push_back("precision_undefined");
    if (r.flags.recall_undefined) flags.push_back("recall_undefined");
    if (r.flags.f1_undefined) flags.push_back("f1_undefined");
    if (r.flags.empty) flags.push_back("empty");
    j["flags"] = std::move(flags);
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
    r = MetricsReport{};
    j.at("key").get_to(r.key);
    j.at("samples").get_to(r.samples);
    j.at("accuracy").get_to(r.accuracy);
    j.at("auc").get_to(r.auc);
    j.at("f1").get_to(r.f1);
    j.at("precision").get_to(r.precision);
    j.at("recall").get_to(r.recall);
    j.at("tp").get_to(r.tp);
    j.at("fp").get_to(r.fp);
    j.at("tn").get_to(r.tn);
    j.at("fn").get_to(r.fn);
    for (const auto& f : j.at("flags")) {
        const std::string name = f.get<std::string>();
        if (name == "auc_undefined") r.flags.auc_undefined = true;
        else if (name == "precision_undefined") r.flags.precision_undefined = true;
        else if (name == "recall_undefined") r.flags.recall_undefined = true;
        else if (name == "f1_undefined") r.flags.f1_undefined = true;
        else if (name == "empty") r.flags.empty = true;
        else throw ValidationError("metrics: unknown flag '" + name + "'");
    }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports) {
    out << "key,samples,accuracy,auc,f1,precision,recall,tp,fp,tn,fn,flags\n";
    const auto prev = out.precision(10);
    for (const auto& r : reports) {
        std::string flags;
        const auto add = [&](bool on, const char* name) {
            if (!on) return;
            if (!flags.empty()) flags += '|';
            flags += name;
        };
        add(r.flags.auc_undefined, "auc_undefined");
        add(r.flags.precision_undefined, "precision_undefined");
        add(r.flags.recall_undefined, "recall_undefined");
        add(r.flags.f1_undefined, "f1_undefined");
        add(r.flags.empty, "empty");
        out << r.key << ',' << r.samples << ',' << r.accuracy << ',' << r.auc << ',' << r.f1 << ',' << r.precision << ','
            << r.recall << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn << ',' << flags << '\n';
    }
    out.precision(prev);
}

} // namespace gtpdm::evaluation
