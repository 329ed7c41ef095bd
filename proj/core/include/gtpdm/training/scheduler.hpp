// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <string>

namespace gtpdm::training {

enum class SchedulerKind { ReduceOnPlateau, Constant };

std::string to_string(SchedulerKind k);
SchedulerKind scheduler_from_string(const std::string& s);

struct PlateauConfig {
    double factor = 0.5;
    std::size_t patience = 8;
    double min_delta = 1e-4;  // absolute improvement that counts
    double min_lr = 0.0;

    /// Throws ConfigError unless factor is in (0, 1) and patience > 0.
    void validate() const;
    bool operator==(const PlateauConfig&) const = default;
};

struct PlateauState {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;
    std::size_t reductions = 0;
    bool operator==(const PlateauState&) const = default;
};

/// Feeds one epoch's validation loss and returns the learning rate for the
/// next epoch. A loss at least `min_delta` below the best so far resets the
/// counter; after `patience` epochs without one the rate is multiplied by
/// `factor` and the counter restarts.
double reduce_on_plateau(PlateauState& state, const PlateauConfig& cfg, double lr, double val_loss);

} // namespace gtpdm::training
