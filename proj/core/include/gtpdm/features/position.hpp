// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm::features {

/// Pixel-space box: center, width, height.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    double left() const noexcept { return cx - 0.5 * w; }
    double top() const noexcept { return cy - 0.5 * h; }
    bool operator==(const BoundingBox&) const = default;
};

using BoundingBoxTrack = std::vector<BoundingBox>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Non-degenerate image line stored as an anchor and its slope; the inverse
/// slope is always derived from dy_dx, so equal slopes compare bitwise.
class ReferenceLine {
public:
    /// Throws ConfigError for horizontal or vertical lines.
    static ReferenceLine through(Point2 a, Point2 b);
    /// `dy_dx` is the image slope; anchor is any point on the line.
    static ReferenceLine from_slope(Point2 anchor, double dy_dx);

    /// Horizontal intersection: the line's x at image height y.
    double x_at(double y) const noexcept { return anchor_.x + (y - anchor_.y) * dx_dy_; }
    /// Vertical intersection: the line's y at image column x.
    double y_at(double x) const noexcept { return anchor_.y + (x - anchor_.x) * dy_dx_; }
    double dy_dx() const noexcept { return dy_dx_; }
    double dx_dy() const noexcept { return dx_dy_; }
    Point2 anchor() const noexcept { return anchor_; }

private:
    ReferenceLine(Point2 anchor, double dy_dx, double dx_dy) : anchor_(anchor), dy_dx_(dy_dx), dx_dy_(dx_dy) {}

    Point2 anchor_;
    double dy_dx_;
    double dx_dy_;
};

/// The two lines bounding the crossing region: A=(0, y_a) to B=(W/2, y_min)
/// and B to C=(W, y_c). y_a and y_c default to the image height.
struct ReferenceLineConfig {
    double width = 0.0;
    double height = 0.0;
    double y_min = 0.0;
    double y_a = 0.0;
    double y_c = 0.0;

    static ReferenceLineConfig standard(double width, double height, double y_min);

    ReferenceLine left() const;
    ReferenceLine right() const;
    /// Line A-B for pedestrians left of the image center, else B-C.
    ReferenceLine select(double first_center_x) const;
    void validate() const;
};

/// One reference line per side, allowing arbitrary (e.g. translated) lines.
struct LinePair {
    ReferenceLine left;
    ReferenceLine right;
    double split_x;

    static LinePair from(const ReferenceLineConfig& cfg) { return {cfg.left(), cfg.right(), 0.5 * cfg.width}; }
    const ReferenceLine& select(double first_center_x) const { return first_center_x < split_x ? left : right; }
};

inline constexpr double kDefaultAreaScale = 100.0;

/// Per-frame (dDx, dDy, R) rows; row 0 is zero.
struct PdmFeatures {
    Tensor values;  // [T x 3]
    double alpha = kDefaultAreaScale;
};

struct PositionFeatures {
    Tensor displacement;  // [T x 2]
    Tensor velocity;      // [T x 2]
    PdmFeatures pdm;
};

/// Row t = (x_t - x_0, y_t - y_0).
Tensor compute_displacement(const BoundingBoxTrack& track);
/// Row t = (x_t - x_{t-1}, y_t - y_{t-1}); row 0 = (0, 0).
Tensor compute_velocity(const BoundingBoxTrack& track);

/// Signed disparity of a box center to a line: (x - x_line(y), y - y_line(x)).
Point2 line_disparity(const BoundingBox& box, const ReferenceLine& line);

/// Frame-differenced disparities to the active line plus the area ratio
/// R_t = (A_t / A_{t-1} - 1) * alpha. The differences are evaluated through
/// the line slopes only, so any parallel translate of the line produces
/// identical values.
PdmFeatures compute_pdm(const BoundingBoxTrack& track, const ReferenceLine& line, double alpha = kDefaultAreaScale);
PdmFeatures compute_pdm(const BoundingBoxTrack& track, const LinePair& lines, double alpha = kDefaultAreaScale);
PdmFeatures compute_pdm(const BoundingBoxTrack& track, const ReferenceLineConfig& lines,
                        double alpha = kDefaultAreaScale);

PositionFeatures compute_position_features(const BoundingBoxTrack& track, const ReferenceLineConfig& lines,
                                           double alpha = kDefaultAreaScale);

} // namespace gtpdm::features
