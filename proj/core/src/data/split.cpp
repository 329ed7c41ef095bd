// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "gtpdm/errors.hpp"
#include "gtpdm/tensor/rng.hpp"

namespace gtpdm::data {
namespace {

std::vector<std::string> shuffled_ids(const std::vector<AnnotationRecord>& records, std::uint64_t seed) {
    std::vector<std::string> ids = pedestrian_ids(records);
    std::sort(ids.begin(), ids.end());
    CounterRng rng(seed);
    rng.shuffle(ids);
    return ids;
}

std::string joined(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

} // namespace

void SplitSpec::validate() const {
    std::set<std::string> seen;
    for (const auto* part : {&train, &val, &test}) {
        for (const auto& id : *part) {
            if (!seen.insert(id).second) throw ValidationError("split '" + name + "': id '" + id + "' in more than one part");
        }
    }
}

std::vector<std::string> pedestrian_ids(const std::vector<AnnotationRecord>& records) {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (seen.insert(r.pedestrian_id).second) ids.push_back(r.pedestrian_id);
    }
    return ids;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> ratios) {
    double total = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("split ratios must be finite and non-negative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios sum to " + std::to_string(total) + ", expected 1");
    if (ratios[0] == 0.0) throw ConfigError("split ratios leave the train part empty");
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * ratios[i];
        // guard against 5.000000000001 style representation error
        const double fl = std::floor(exact + 1e-9);
        sizes[i] = static_cast<std::size_t>(fl);
        frac[i] = exact - fl;
        used += sizes[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; used < n; ++k, ++used) ++sizes[order[k % 3]];
    return sizes;
}

SplitSpec split_by_id(const std::vector<AnnotationRecord>& records, std::array<double, 3> ratios, std::uint64_t seed) {
    const std::vector<std::string> ids = shuffled_ids(records, seed);
    const auto sizes = split_sizes(ids.size(), ratios);
    if (sizes[0] == 0) throw ConfigError("split by id: too few pedestrians (" + std::to_string(ids.size()) + ") for a train part");
    SplitSpec s;
    s.name = "by-id";
    s.seed = seed;
    auto it = ids.begin();
    s.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    s.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    s.test.assign(it, ids.end());
    return s;
}

SplitSpec split_by_set(const std::vector<AnnotationRecord>& records, const std::vector<std::string>& train_sets,
                       const std::vector<std::string>& val_sets, const std::vector<std::string>& test_sets) {
    std::set<std::string> present;
    std::unordered_map<std::string, std::string> set_of_id;
    for (const auto& r : records) {
        present.insert(r.set_id);
        const auto [it, inserted] = set_of_id.emplace(r.pedestrian_id, r.set_id);
        if (!inserted && it->second != r.set_id) {
            throw ValidationError("pedestrian '" + r.pedestrian_id + "' appears in sets '" + it->second + "' and '" +
                                  r.set_id + "'");
        }
    }
    std::map<std::string, int> part_of_set;
    const std::array<const std::vector<std::string>*, 3> lists{&train_sets, &val_sets, &test_sets};
    const std::array<const char*, 3> names{"train", "val", "test"};
    for (int p = 0; p < 3; ++p) {
        if (lists[p]->empty()) throw ConfigError(std::string("split by set: empty ") + names[p] + " set list");
        for (const auto& set : *lists[p]) {
            if (!present.count(set)) {
                throw ConfigError(std::string("split by set: unknown set id '") + set + "' in " + names[p] +
                                  " (known: " + joined({present.begin(), present.end()}) + ")");
            }
            if (!part_of_set.emplace(set, p).second) throw ConfigError("split by set: set '" + set + "' listed twice");
        }
    }
    SplitSpec s;
    s.name = "by-set";
    std::array<std::vector<std::string>*, 3> parts{&s.train, &s.val, &s.test};
    for (const auto& id : pedestrian_ids(records)) {
        const auto it = part_of_set.find(set_of_id.at(id));
        if (it != part_of_set.end()) parts[static_cast<std::size_t>(it->second)]->push_back(id);
    }
    return s;
}

std::vector<SplitSpec> kfold_split(const std::vector<AnnotationRecord>& records, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("kfold needs k >= 2, got " + std::to_string(k));
    const std::vector<std::string> ids = shuffled_ids(records, seed);
    if (k > ids.size()) {
        throw ConfigError("kfold: k = " + std::to_string(k) + " exceeds the " + std::to_string(ids.size()) +
                          " pedestrian ids");
    }
    std::vector<std::vector<std::string>> folds(k);
    const std::size_t base = ids.size() / k, extra = ids.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    std::vector<SplitSpec> out;
    for (std::size_t i = 0; i < k; ++i) {
        SplitSpec s;
        s.name = "fold-" + std::to_string(i);
        s.seed = seed;
        s.test = folds[i];
        for (std::size_t f = 0; f < k; ++f) {
            if (f != i) s.train.insert(s.train.end(), folds[f].begin(), folds[f].end());
        }
        out.push_back(std::move(s));
    }
    return out;
}

SplitRecords apply_split(const std::vector<AnnotationRecord>& records, const SplitSpec& split) {
    split.validate();
    std::unordered_map<std::string, int> part;
    for (const auto& id : split.train) part[id] = 0;
    for (const auto& id : split.val) part[id] = 1;
    for (const auto& id : split.test) part[id] = 2;
    SplitRecords out;
    for (const auto& r : records) {
        const auto it = part.find(r.pedestrian_id);
        if (it == part.end()) continue;
        (it->second == 0 ? out.train : it->second == 1 ? out.val : out.test).push_back(r);
    }
    return out;
}

} // namespace gtpdm::data
