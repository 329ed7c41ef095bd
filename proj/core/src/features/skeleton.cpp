// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/features/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "gtpdm/errors.hpp"

namespace gtpdm::features {
namespace {

constexpr std::array<Edge, 25> kDefaultEdges{{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12}, {5, 6}, {5, 7}, {6, 8},
    {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},   {1, 3},  {2, 4},  {3, 5}, {4, 6},
    {17, 5},  {17, 6},  {17, 19}, {19, 18}, {18, 11}, {18, 12},
}};

Keypoint midpoint(const Keypoint& a, const Keypoint& b) {
    return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * (a.score + b.score)};
}

} // namespace

SkeletonTrack normalize_keypoints(const SkeletonTrack& image_keypoints, const BoundingBoxTrack& boxes) {
    if (image_keypoints.size() != boxes.size()) {
        throw FeatureError("normalize_keypoints: " + std::to_string(image_keypoints.size()) +
                           " keypoint frames for " + std::to_string(boxes.size()) + " boxes");
    }
    SkeletonTrack out(image_keypoints.size());
    for (std::size_t t = 0; t < boxes.size(); ++t) {
        if (image_keypoints[t].size() != kJointCount) {
            throw FeatureError("normalize_keypoints: frame " + std::to_string(t) + " has " +
                               std::to_string(image_keypoints[t].size()) + " joints, expected " +
                               std::to_string(kJointCount));
        }
        const double x0 = boxes[t].left();
        const double y0 = boxes[t].top();
        out[t].reserve(kJointCount);
        for (const Keypoint& k : image_keypoints[t]) out[t].push_back({k.x - x0, k.y - y0, k.score});
    }
    return out;
}

SkeletonFrame augment_frame(const SkeletonFrame& coco17) {
    if (coco17.size() != kCocoJointCount) {
        throw FeatureError("augment_keypoints: expected " + std::to_string(kCocoJointCount) + " joints, got " +
                           std::to_string(coco17.size()));
    }
    SkeletonFrame f = coco17;
    const Keypoint neck = midpoint(coco17[joint::kLeftShoulder], coco17[joint::kRightShoulder]);
    const Keypoint hip = midpoint(coco17[joint::kLeftHip], coco17[joint::kRightHip]);
    f.push_back(neck);
    f.push_back(hip);
    f.push_back(midpoint(neck, hip));
    return f;
}

SkeletonTrack augment_keypoints(const SkeletonTrack& coco17) {
    SkeletonTrack out;
    out.reserve(coco17.size());
    for (const SkeletonFrame& f : coco17) out.push_back(augment_frame(f));
    return out;
}

SkeletonGraph build_normalized_adjacency(std::span<const Edge> edges, std::size_t nodes) {
    if (nodes == 0) throw ConfigError("skeleton graph needs at least one node");
    SkeletonGraph g{nodes, Tensor(Shape{nodes, nodes}), std::vector<double>(nodes, 0.0), Tensor(Shape{nodes, nodes})};
    for (std::size_t i = 0; i < nodes; ++i) g.adjacency.at(i, i) = 1.0;
    for (const auto& [i, j] : edges) {
        if (i >= nodes || j >= nodes) {
            throw ConfigError("skeleton edge (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") out of range for " + std::to_string(nodes) + " nodes");
        }
        g.adjacency.at(i, j) = 1.0;
        g.adjacency.at(j, i) = 1.0;
    }
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = 0; j < nodes; ++j) g.degree[i] += g.adjacency.at(i, j);
    }
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = 0; j < nodes; ++j) {
            g.normalized.at(i, j) = g.adjacency.at(i, j) / std::sqrt(g.degree[i] * g.degree[j]);
        }
    }
    return g;
}

std::span<const Edge> default_skeleton_edges() { return kDefaultEdges; }

std::vector<Edge> load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open skeleton edge file " + path.string());
    std::vector<Edge> edges;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        long long i = 0, j = 0;
        if (!(ss >> i)) continue;
        std::string rest;
        if (!(ss >> j) || (ss >> rest) || i < 0 || j < 0) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected two non-negative joint ids");
        }
        edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    return edges;
}

double spectral_radius(const Tensor& square, std::size_t iterations) {
    if (square.rank() != 2 || square.dim(0) != square.dim(1)) {
        throw DimensionError("spectral_radius needs a square matrix, got " + shape_string(square.shape()));
    }
    const std::size_t n = square.dim(0);
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
    double lambda = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += square.at(i, j) * v[j];
            w[i] = s;
            norm += s * s;
        }
        norm = std::sqrt(norm);
        lambda = norm;
        if (norm == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return lambda;
}

} // namespace gtpdm::features
