// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/data/annotation.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::data {
namespace {

using nlohmann::json;

double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ValidationError("field '" + field + "': expected a number, got " + j.dump());
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError("field '" + field + "': non-finite value");
    return v;
}

const json& array(const json* j, const std::string& field) {
    if (!j) throw ValidationError("field '" + field + "': missing");
    if (!j->is_array()) throw ValidationError("field '" + field + "': expected an array");
    return *j;
}

const json& fixed_array(const json& j, const std::string& field, std::size_t want) {
    if (!j.is_array() || j.size() != want) {
        throw ValidationError("field '" + field + "': expected an array of " + std::to_string(want) + " numbers");
    }
    return j;
}

std::string indexed(const char* field, std::size_t i) { return std::string(field) + "[" + std::to_string(i) + "]"; }

features::SkeletonFrame parse_joints(const json& j, const std::string& field) {
    if (!j.is_array() || (j.size() != features::kCocoJointCount && j.size() != features::kJointCount)) {
        throw ValidationError("field '" + field + "': expected " + std::to_string(features::kCocoJointCount) +
                              " or " + std::to_string(features::kJointCount) + " joints");
    }
    features::SkeletonFrame f;
    f.reserve(features::kJointCount);
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string jf = field + "[" + std::to_string(k) + "]";
        const json& p = fixed_array(j[k], jf, 3);
        f.push_back({number(p[0], jf), number(p[1], jf), number(p[2], jf)});
    }
    return f.size() == features::kCocoJointCount ? features::augment_frame(f) : f;
}

AnnotationRecord parse_record(const json& j) {
    util::FieldReader r(j, "record");
    AnnotationRecord rec;
    r.require("pedestrian_id", rec.pedestrian_id);
    r.read("video_id", rec.video_id);
    r.read("set_id", rec.set_id);
    std::string label;
    r.require("label", label);
    if (label == "cross") {
        rec.crossing = true;
    } else if (label != "not-cross") {
        throw ValidationError("field 'label': expected \"cross\" or \"not-cross\", got \"" + label + "\"");
    }
    if (const json* e = r.get("event_frame"); e && !e->is_null()) {
        if (!e->is_number_integer()) throw ValidationError("field 'event_frame': expected an integer");
        rec.event_frame = e->get<std::int64_t>();
    }
    r.read("fps", rec.fps);
    const json* image = r.get("image");
    if (!image) throw ValidationError("field 'image': missing");
    util::FieldReader ir(*image, "image");
    ir.require("width", rec.image_width);
    ir.require("height", rec.image_height);
    ir.finish();

    for (const json& f : array(r.get("frames"), "frames")) {
        if (!f.is_number_integer()) throw ValidationError("field 'frames': expected integers");
        rec.frames.push_back(f.get<std::int64_t>());
    }
    const json& boxes = array(r.get("boxes"), "boxes");
    for (std::size_t t = 0; t < boxes.size(); ++t) {
        const std::string bf = indexed("boxes", t);
        const json& b = fixed_array(boxes[t], bf, 4);
        rec.boxes.push_back({number(b[0], bf), number(b[1], bf), number(b[2], bf), number(b[3], bf)});
    }
    if (const json* kp = r.get("keypoints"); kp && !kp->is_null()) {
        const json& frames = array(kp, "keypoints");
        for (std::size_t t = 0; t < frames.size(); ++t) rec.keypoints.push_back(parse_joints(frames[t], indexed("keypoints", t)));
    }
    if (const json* s = r.get("ego_speed"); s && !s->is_null()) {
        const json& speeds = array(s, "ego_speed");
        for (std::size_t t = 0; t < speeds.size(); ++t) rec.ego_speed.push_back(number(speeds[t], indexed("ego_speed", t)));
    }
    if (const json* s = r.get("ego_state"); s && !s->is_null()) {
        for (const json& v : array(s, "ego_state")) {
            if (!v.is_string()) throw ValidationError("field 'ego_state': expected strings");
            rec.ego_state.push_back(v.get<std::string>());
        }
    }
    r.finish();
    return rec;
}

void check_header(const json& h) {
    if (!h.is_object() || !h.contains("schema") || !h.contains("version")) {
        throw ValidationError("first line must be a schema header {\"schema\": \"" + std::string(kAnnotationSchema) +
                              "\", \"version\": " + std::to_string(kAnnotationSchemaVersion) + "}");
    }
    if (h["schema"] != kAnnotationSchema) throw ValidationError("field 'schema': unsupported schema " + h["schema"].dump());
    if (h["version"] != kAnnotationSchemaVersion) {
        throw ValidationError("field 'version': unsupported version " + h["version"].dump() + ", expected " +
                              std::to_string(kAnnotationSchemaVersion));
    }
}

json record_json(const AnnotationRecord& r) {
    json j;
    j["pedestrian_id"] = r.pedestrian_id;
    j["video_id"] = r.video_id;
    j["set_id"] = r.set_id;
    j["label"] = r.crossing ? "cross" : "not-cross";
    j["event_frame"] = r.event_frame ? json(*r.event_frame) : json(nullptr);
    j["fps"] = r.fps;
    j["image"] = {{"width", r.image_width}, {"height", r.image_height}};
    j["frames"] = r.frames;
    json boxes = json::array();
    for (const auto& b : r.boxes) boxes.push_back({b.cx, b.cy, b.w, b.h});
    j["boxes"] = std::move(boxes);
    if (r.has_keypoints()) {
        json kp = json::array();
        for (const auto& f : r.keypoints) {
            json frame = json::array();
            for (const auto& k : f) frame.push_back({k.x, k.y, k.score});
            kp.push_back(std::move(frame));
        }
        j["keypoints"] = std::move(kp);
    }
    if (!r.ego_speed.empty()) j["ego_speed"] = r.ego_speed;
    if (!r.ego_state.empty()) j["ego_state"] = r.ego_state;
    return j;
}

} // namespace

void AnnotationRecord::validate() const {
    const auto bad = [&](const std::string& what) { throw ValidationError("track '" + pedestrian_id + "': " + what); };
    if (pedestrian_id.empty()) throw ValidationError("field 'pedestrian_id': empty");
    if (frames.empty()) bad("no frames");
    for (std::size_t t = 1; t < frames.size(); ++t) {
        if (frames[t] <= frames[t - 1]) {
            bad("field 'frames': index " + std::to_string(t) + " (" + std::to_string(frames[t]) +
                ") is not greater than the previous frame (" + std::to_string(frames[t - 1]) + ")");
        }
    }
    const auto parallel = [&](std::size_t n, const char* field) {
        if (n != frames.size()) {
            bad(std::string("field '") + field + "': " + std::to_string(n) + " entries for " +
                std::to_string(frames.size()) + " frames");
        }
    };
    parallel(boxes.size(), "boxes");
    for (std::size_t t = 0; t < boxes.size(); ++t) {
        if (!(boxes[t].w > 0.0) || !(boxes[t].h > 0.0)) bad("field 'boxes[" + std::to_string(t) + "]': non-positive size");
    }
    if (has_keypoints()) {
        parallel(keypoints.size(), "keypoints");
        for (std::size_t t = 0; t < keypoints.size(); ++t) {
            if (keypoints[t].size() != features::kJointCount) {
                bad("field 'keypoints[" + std::to_string(t) + "]': " + std::to_string(keypoints[t].size()) + " joints");
            }
        }
    }
    if (ego_speed.empty() == ego_state.empty()) bad("exactly one of 'ego_speed' or 'ego_state' must be given");
    if (!ego_speed.empty()) parallel(ego_speed.size(), "ego_speed");
    if (!ego_state.empty()) parallel(ego_state.size(), "ego_state");
    if (crossing && !event_frame) bad("field 'event_frame': required for a cross-labeled track");
    if (!(fps > 0.0)) bad("field 'fps': must be positive");
    if (!(image_width > 0.0) || !(image_height > 0.0)) bad("field 'image': width and height must be positive");
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source) {
    std::vector<AnnotationRecord> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        try {
            const json j = json::parse(line);
            if (!header) {
                check_header(j);
                header = true;
                continue;
            }
            AnnotationRecord rec = parse_record(j);
            rec.validate();
            out.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ValidationError(where + ": malformed JSON: " + e.what());
        } catch (const Error& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    if (!header) throw ValidationError(source + ": missing schema header");
    return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation file '" + path.string() + "'");
    return parse_annotations(in, path.string());
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
    out << json{{"schema", kAnnotationSchema}, {"version", kAnnotationSchemaVersion}}.dump() << '\n';
    for (const auto& r : records) {
        r.validate();
        out << record_json(r).dump() << '\n';
    }
}

void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write annotation file '" + path.string() + "'");
    write_annotations(out, records);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace gtpdm::data
