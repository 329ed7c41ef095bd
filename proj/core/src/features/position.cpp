// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/features/position.hpp"

#include <cmath>
#include <string>

#include "gtpdm/errors.hpp"

namespace gtpdm::features {
namespace {

void require_nonempty(const BoundingBoxTrack& track, const char* what) {
    if (track.empty()) throw FeatureError(std::string(what) + ": empty bounding-box track");
}

} // namespace

ReferenceLine ReferenceLine::through(Point2 a, Point2 b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    if (!(std::isfinite(dx) && std::isfinite(dy)) || dx == 0.0 || dy == 0.0) {
        throw ConfigError("reference line through (" + std::to_string(a.x) + ", " + std::to_string(a.y) + ") and (" +
                          std::to_string(b.x) + ", " + std::to_string(b.y) + ") is horizontal or vertical");
    }
    return from_slope(a, dy / dx);
}

ReferenceLine ReferenceLine::from_slope(Point2 anchor, double dy_dx) {
    if (!std::isfinite(dy_dx) || dy_dx == 0.0) throw ConfigError("reference line slope must be finite and non-zero");
    return ReferenceLine(anchor, dy_dx, 1.0 / dy_dx);
}

ReferenceLineConfig ReferenceLineConfig::standard(double width, double height, double y_min) {
    ReferenceLineConfig c{width, height, y_min, height, height};
    c.validate();
    return c;
}

void ReferenceLineConfig::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("reference lines need a positive image size");
    if (!(y_min < y_a) || !(y_min < y_c)) {
        throw ConfigError("reference lines degenerate: y_min " + std::to_string(y_min) +
                          " must lie above both endpoints (y_a " + std::to_string(y_a) + ", y_c " +
                          std::to_string(y_c) + ")");
    }
}

ReferenceLine ReferenceLineConfig::left() const { return ReferenceLine::through({0.0, y_a}, {0.5 * width, y_min}); }

ReferenceLine ReferenceLineConfig::right() const { return ReferenceLine::through({0.5 * width, y_min}, {width, y_c}); }

ReferenceLine ReferenceLineConfig::select(double first_center_x) const {
    return first_center_x < 0.5 * width ? left() : right();
}

Tensor compute_displacement(const BoundingBoxTrack& track) {
    require_nonempty(track, "compute_displacement");
    Tensor d(Shape{track.size(), 2});
    for (std::size_t t = 0; t < track.size(); ++t) {
        d.at(t, 0) = track[t].cx - track[0].cx;
        d.at(t, 1) = track[t].cy - track[0].cy;
    }
    return d;
}

Tensor compute_velocity(const BoundingBoxTrack& track) {
    require_nonempty(track, "compute_velocity");
    Tensor v(Shape{track.size(), 2});
    for (std::size_t t = 1; t < track.size(); ++t) {
        v.at(t, 0) = track[t].cx - track[t - 1].cx;
        v.at(t, 1) = track[t].cy - track[t - 1].cy;
    }
    return v;
}

Point2 line_disparity(const BoundingBox& box, const ReferenceLine& line) {
    return {box.cx - line.x_at(box.cy), box.cy - line.y_at(box.cx)};
}

PdmFeatures compute_pdm(const BoundingBoxTrack& track, const ReferenceLine& line, double alpha) {
    require_nonempty(track, "compute_pdm");
    for (std::size_t t = 0; t < track.size(); ++t) {
        if (!(track[t].area() > 0.0)) {
            throw FeatureError("compute_pdm: non-positive box area " + std::to_string(track[t].area()) + " at frame " +
                               std::to_string(t));
        }
    }
    PdmFeatures out{Tensor(Shape{track.size(), 3}), alpha};
    for (std::size_t t = 1; t < track.size(); ++t) {
        const double dx = track[t].cx - track[t - 1].cx;
        const double dy = track[t].cy - track[t - 1].cy;
        // (x_t - x_l(y_t)) - (x_{t-1} - x_l(y_{t-1})) = dx - dy * dx/dy|line
        out.values.at(t, 0) = dx - dy * line.dx_dy();
        out.values.at(t, 1) = dy - dx * line.dy_dx();
        out.values.at(t, 2) = (track[t].area() / track[t - 1].area() - 1.0) * alpha;
    }
    return out;
}

PdmFeatures compute_pdm(const BoundingBoxTrack& track, const LinePair& lines, double alpha) {
    require_nonempty(track, "compute_pdm");
    return compute_pdm(track, lines.select(track.front().cx), alpha);
}

PdmFeatures compute_pdm(const BoundingBoxTrack& track, const ReferenceLineConfig& lines, double alpha) {
    lines.validate();
    return compute_pdm(track, LinePair::from(lines), alpha);
}

PositionFeatures compute_position_features(const BoundingBoxTrack& track, const ReferenceLineConfig& lines,
                                           double alpha) {
    return {compute_displacement(track), compute_velocity(track), compute_pdm(track, lines, alpha)};
}

} // namespace gtpdm::features
