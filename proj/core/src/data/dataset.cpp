// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "gtpdm/data/ego_state.hpp"
#include "gtpdm/errors.hpp"
#include "gtpdm/features/ego.hpp"
#include "gtpdm/features/skeleton.hpp"
#include "gtpdm/tensor/rng.hpp"
#include "../util/binary_io.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::data {
namespace {

constexpr std::string_view kDatasetMagic = "GTPDMDS1";
constexpr std::uint32_t kDatasetVersion = 1;

void copy_rows(const Tensor& src, Tensor& dst, std::size_t b) {
    std::copy(src.raw(), src.raw() + src.size(), dst.raw() + b * src.size());
}

Shape batched(std::size_t B, const Shape& s) {
    Shape out{B};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

} // namespace

void FeaturizeConfig::validate() const {
    if (T < 2) throw ConfigError("features.T must be at least 2, got " + std::to_string(T));
    tte.validate();
    window_stride(T, overlap);
    if (!(area_scale > 0.0)) throw ConfigError("features.area_scale must be positive");
    const auto v = vocabulary();
    if (v.empty()) throw ConfigError("features.ego_vocabulary is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::find(v.begin() + static_cast<std::ptrdiff_t>(i) + 1, v.end(), v[i]) != v.end()) {
            throw ConfigError("features.ego_vocabulary repeats '" + v[i] + "'");
        }
    }
}

std::vector<std::string> FeaturizeConfig::vocabulary() const {
    if (!ego_vocabulary.empty()) return ego_vocabulary;
    const auto d = default_ego_vocabulary();
    return {d.begin(), d.end()};
}

void to_json(nlohmann::json& j, const FeaturizeConfig& c) {
    j = nlohmann::json{{"T", c.T},
                       {"tte", {c.tte.lo, c.tte.hi}},
                       {"overlap", c.overlap},
                       {"area_scale", c.area_scale},
                       {"line_a_dy", c.line_a_dy},
                       {"line_c_dy", c.line_c_dy},
                       {"y_min", c.y_min ? nlohmann::json(*c.y_min) : nlohmann::json(nullptr)},
                       {"ego_mode", model::to_string(c.ego_mode)},
                       {"ego_vocabulary", c.vocabulary()},
                       {"balance", c.balance},
                       {"balance_seed", c.balance_seed}};
}

void from_json(const nlohmann::json& j, FeaturizeConfig& c) {
    util::FieldReader r(j, "features");
    r.read("T", c.T);
    std::vector<std::int64_t> tte;
    if (r.read("tte", tte)) {
        if (tte.size() != 2) throw ConfigError("features.tte: expected [lo, hi]");
        c.tte = {tte[0], tte[1]};
    }
    r.read("overlap", c.overlap);
    r.read("area_scale", c.area_scale);
    r.read("line_a_dy", c.line_a_dy);
    r.read("line_c_dy", c.line_c_dy);
    if (const auto* y = r.get("y_min"); y && !y->is_null()) {
        if (!y->is_number()) throw ConfigError("features.y_min: wrong type (" + y->dump() + ")");
        c.y_min = y->get<double>();
    }
    std::string mode;
    if (r.read("ego_mode", mode)) c.ego_mode = model::ego_mode_from_string(mode);
    r.read("ego_vocabulary", c.ego_vocabulary);
    r.read("balance", c.balance);
    r.read("balance_seed", c.balance_seed);
    r.finish();
    c.validate();
}

std::size_t Dataset::positives() const noexcept {
    return static_cast<std::size_t>(std::count_if(windows.begin(), windows.end(), [](const auto& w) { return w.label == 1; }));
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(w.label);
    return out;
}

double min_center_y(const std::vector<AnnotationRecord>& records) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        for (const auto& b : r.boxes) m = std::min(m, b.cy);
    }
    if (!std::isfinite(m)) throw ValidationError("cannot derive y_min from an empty record set");
    return m;
}

features::ReferenceLineConfig reference_lines(const FeaturizeConfig& cfg, double width, double height, double y_min) {
    features::ReferenceLineConfig lines{width, height, y_min, height + cfg.line_a_dy, height + cfg.line_c_dy};
    lines.validate();
    return lines;
}

WindowFeatures featurize_window(const AnnotationRecord& record, const WindowSample& window, const FeaturizeConfig& cfg,
                                double y_min) {
    const std::size_t T = window.length;
    if (window.first + T > record.length()) throw ValidationError("window runs past the end of track '" + record.pedestrian_id + "'");
    const auto begin = static_cast<std::ptrdiff_t>(window.first);
    const auto end = begin + static_cast<std::ptrdiff_t>(T);
    const features::BoundingBoxTrack boxes(record.boxes.begin() + begin, record.boxes.begin() + end);

    WindowFeatures w;
    w.pedestrian_id = record.pedestrian_id;
    w.end_frame = window.end_frame;
    w.tte = window.tte;
    w.label = window.label;
    auto pos = features::compute_position_features(
        boxes, reference_lines(cfg, record.image_width, record.image_height, y_min), cfg.area_scale);
    w.pdm = std::move(pos.pdm.values);
    w.displacement = std::move(pos.displacement);
    w.velocity = std::move(pos.velocity);

    if (cfg.ego_mode == model::EgoMode::SpeedAccel) {
        if (record.ego_speed.empty()) {
            throw ConfigError("config mismatch: ego_mode speed_accel but track '" + record.pedestrian_id +
                              "' has only ego states");
        }
        const std::vector<double> speeds(record.ego_speed.begin() + begin, record.ego_speed.begin() + end);
        w.ego = Tensor(Shape{T, 1}, speeds);
        w.accel = Tensor(Shape{T, 1}, features::ego_acceleration_track(speeds, record.fps));
    } else {
        if (record.ego_state.empty()) {
            throw ConfigError("config mismatch: ego_mode state_onehot but track '" + record.pedestrian_id +
                              "' has only ego speeds");
        }
        const auto vocab = cfg.vocabulary();
        w.ego = Tensor(Shape{T, vocab.size()});
        for (std::size_t t = 0; t < T; ++t) {
            const auto hot = ego_state_onehot(record.ego_state[window.first + t], vocab);
            std::copy(hot.begin(), hot.end(), w.ego.raw() + t * vocab.size());
        }
        w.accel = Tensor(Shape{T, 1});
    }

    w.keypoints = Tensor(Shape{T, features::kJointCount, 3});
    if (record.has_keypoints()) {
        const features::SkeletonTrack kp(record.keypoints.begin() + begin, record.keypoints.begin() + end);
        const auto norm = features::normalize_keypoints(kp, boxes);
        double* dst = w.keypoints.raw();
        for (const auto& frame : norm) {
            for (const auto& k : frame) {
                *dst++ = k.x;
                *dst++ = k.y;
                *dst++ = k.score;
            }
        }
    }
    return w;
}

Dataset featurize(const std::vector<AnnotationRecord>& records, const FeaturizeConfig& cfg, std::optional<double> y_min) {
    cfg.validate();
    Dataset d;
    d.T = cfg.T;
    d.ego_mode = cfg.ego_mode;
    d.ego_width = cfg.ego_mode == model::EgoMode::SpeedAccel ? 1 : cfg.vocabulary().size();
    d.y_min = y_min ? *y_min : cfg.y_min ? *cfg.y_min : min_center_y(records);
    for (const auto& r : records) {
        if (r.length() < cfg.T) {
            ++d.skipped_tracks;
            continue;
        }
        if (!r.has_keypoints()) d.has_keypoints = false;
        for (const WindowSample& s : sample_windows(r, cfg.T, cfg.tte, cfg.overlap)) {
            d.windows.push_back(featurize_window(r, s, cfg, d.y_min));
        }
    }
    if (cfg.balance && !d.windows.empty()) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < d.windows.size(); ++i) (d.windows[i].label ? pos : neg).push_back(i);
        auto& major = pos.size() > neg.size() ? pos : neg;
        const std::size_t keep = std::min(pos.size(), neg.size());
        CounterRng rng(cfg.balance_seed);
        rng.shuffle(major);
        major.resize(keep);
        std::vector<std::size_t> kept = pos;
        kept.insert(kept.end(), neg.begin(), neg.end());
        std::sort(kept.begin(), kept.end());
        std::vector<WindowFeatures> out;
        out.reserve(kept.size());
        for (std::size_t i : kept) out.push_back(std::move(d.windows[i]));
        d.windows = std::move(out);
    }
    return d;
}

model::ModelInput make_batch(const Dataset& data, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ValidationError("make_batch: no windows selected");
    const std::size_t B = indices.size();
    const WindowFeatures& first = data.windows.at(indices.front());
    model::ModelInput in;
    in.batch = B;
    in.pdm = Tensor(batched(B, first.pdm.shape()));
    in.displacement = Tensor(batched(B, first.displacement.shape()));
    in.velocity = Tensor(batched(B, first.velocity.shape()));
    in.ego = Tensor(batched(B, first.ego.shape()));
    in.accel = Tensor(batched(B, first.accel.shape()));
    in.keypoints = Tensor(batched(B, first.keypoints.shape()));
    in.labels.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
        const WindowFeatures& w = data.windows.at(indices[b]);
        copy_rows(w.pdm, in.pdm, b);
        copy_rows(w.displacement, in.displacement, b);
        copy_rows(w.velocity, in.velocity, b);
        copy_rows(w.ego, in.ego, b);
        copy_rows(w.accel, in.accel, b);
        copy_rows(w.keypoints, in.keypoints, b);
        in.labels.push_back(w.label);
    }
    return in;
}

model::ModelInput make_batch(const Dataset& data) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return make_batch(data, all);
}

void check_compatible(const Dataset& data, const model::ModelConfig& cfg) {
    const auto mismatch = [](const std::string& what) { throw ConfigError("config mismatch: " + what); };
    if (data.T != cfg.T) mismatch("data windows have T=" + std::to_string(data.T) + ", model expects " + std::to_string(cfg.T));
    if (cfg.use_ego) {
        if (data.ego_mode != cfg.ego_mode) {
            mismatch("data ego mode " + model::to_string(data.ego_mode) + ", model expects " + model::to_string(cfg.ego_mode));
        }
        if (data.ego_width != cfg.ego_input_width()) {
            mismatch("data ego width " + std::to_string(data.ego_width) + ", model expects " +
                     std::to_string(cfg.ego_input_width()));
        }
    }
    if (cfg.use_pose) {
        if (!data.has_keypoints) mismatch("model uses the pose encoder but some tracks carry no keypoints");
        if (cfg.joints != features::kJointCount || cfg.joint_channels != 3) {
            mismatch("data provides " + std::to_string(features::kJointCount) + " joints x 3 channels");
        }
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    nlohmann::json h{{"T", data.T},
                     {"ego_mode", model::to_string(data.ego_mode)},
                     {"ego_width", data.ego_width},
                     {"y_min", data.y_min},
                     {"has_keypoints", data.has_keypoints},
                     {"skipped_tracks", data.skipped_tracks}};
    nlohmann::json ws = nlohmann::json::array();
    for (const auto& w : data.windows) {
        ws.push_back({w.pedestrian_id, w.end_frame, w.tte ? nlohmann::json(*w.tte) : nlohmann::json(nullptr), w.label});
    }
    h["windows"] = std::move(ws);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
    util::write_header(out, kDatasetMagic, kDatasetVersion, h);
    for (const auto& w : data.windows) {
        for (const Tensor* t : {&w.pdm, &w.displacement, &w.velocity, &w.ego, &w.accel, &w.keypoints}) {
            util::write_doubles(out, t->data());
        }
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    const std::string what = path.string();
    const nlohmann::json h = util::read_header(in, kDatasetMagic, kDatasetVersion, what);
    Dataset d;
    try {
        d.T = h.at("T").get<std::size_t>();
        d.ego_mode = model::ego_mode_from_string(h.at("ego_mode").get<std::string>());
        d.ego_width = h.at("ego_width").get<std::size_t>();
        d.y_min = h.at("y_min").get<double>();
        d.has_keypoints = h.at("has_keypoints").get<bool>();
        d.skipped_tracks = h.at("skipped_tracks").get<std::size_t>();
        for (const auto& m : h.at("windows")) {
            WindowFeatures w;
            w.pedestrian_id = m.at(0).get<std::string>();
            w.end_frame = m.at(1).get<std::int64_t>();
            if (!m.at(2).is_null()) w.tte = m.at(2).get<std::int64_t>();
            w.label = m.at(3).get<int>();
            d.windows.push_back(std::move(w));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(what + ": bad dataset header: " + e.what());
    }
    for (auto& w : d.windows) {
        w.pdm = Tensor(Shape{d.T, 3});
        w.displacement = Tensor(Shape{d.T, 2});
        w.velocity = Tensor(Shape{d.T, 2});
        w.ego = Tensor(Shape{d.T, d.ego_width});
        w.accel = Tensor(Shape{d.T, 1});
        w.keypoints = Tensor(Shape{d.T, features::kJointCount, 3});
        for (Tensor* t : {&w.pdm, &w.displacement, &w.velocity, &w.ego, &w.accel, &w.keypoints}) {
            util::read_doubles(in, t->data(), what);
        }
    }
    return d;
}

} // namespace gtpdm::data
