// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "gtpdm/features/position.hpp"
#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm::features {

inline constexpr std::size_t kCocoJointCount = 17;
inline constexpr std::size_t kJointCount = 20;

/// COCO-17 indices used to build the synthetic joints.
namespace joint {
inline constexpr std::size_t kLeftShoulder = 5;
inline constexpr std::size_t kRightShoulder = 6;
inline constexpr std::size_t kLeftHip = 11;
inline constexpr std::size_t kRightHip = 12;
inline constexpr std::size_t kNeck = 17;
inline constexpr std::size_t kHipCenter = 18;
inline constexpr std::size_t kBodyCenter = 19;
} // namespace joint

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double score = 0.0;
    bool operator==(const Keypoint&) const = default;
};

using SkeletonFrame = std::vector<Keypoint>;
/// Box-relative joints per frame; kJointCount joints after augmentation.
using SkeletonTrack = std::vector<SkeletonFrame>;

using Edge = std::pair<std::size_t, std::size_t>;

struct SkeletonGraph {
    std::size_t nodes = 0;
    Tensor adjacency;   // [N x N], symmetric 0/1 with unit diagonal
    std::vector<double> degree;
    Tensor normalized;  // D^-1/2 A D^-1/2
};

/// Subtracts each frame's box top-left corner; scores pass through.
SkeletonTrack normalize_keypoints(const SkeletonTrack& image_keypoints, const BoundingBoxTrack& boxes);

/// Appends neck, hip center and body center (means of their parents) to
/// 17-joint COCO frames.
SkeletonTrack augment_keypoints(const SkeletonTrack& coco17);
SkeletonFrame augment_frame(const SkeletonFrame& coco17);

SkeletonGraph build_normalized_adjacency(std::span<const Edge> edges, std::size_t nodes);

/// The built-in 20-joint connectivity (COCO limbs plus the synthetic joints).
std::span<const Edge> default_skeleton_edges();

/// Reads `i j` pairs, one per line; blank lines and `#` comments are skipped.
std::vector<Edge> load_edge_list(const std::filesystem::path& path);

/// Largest eigenvalue magnitude estimate by power iteration.
double spectral_radius(const Tensor& square, std::size_t iterations = 500);

} // namespace gtpdm::features
