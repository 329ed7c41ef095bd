// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/training/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "gtpdm/errors.hpp"

namespace gtpdm::training {
namespace {

// Absorbs rounding in the subtraction so an improvement of exactly min_delta counts.
constexpr double kDeltaSlack = 1e-12;

} // namespace

std::string to_string(SchedulerKind k) { return k == SchedulerKind::ReduceOnPlateau ? "plateau" : "constant"; }

SchedulerKind scheduler_from_string(const std::string& s) {
    if (s == "plateau") return SchedulerKind::ReduceOnPlateau;
    if (s == "constant") return SchedulerKind::Constant;
    throw ConfigError("unknown scheduler '" + s + "', expected plateau or constant");
}

void PlateauConfig::validate() const {
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("scheduler.factor must lie in (0, 1)");
    if (patience == 0) throw ConfigError("scheduler.patience must be positive");
    if (!(min_delta >= 0.0) || !(min_lr >= 0.0)) throw ConfigError("scheduler.min_delta and min_lr must be non-negative");
}

double reduce_on_plateau(PlateauState& state, const PlateauConfig& cfg, double lr, double val_loss) {
    const bool first = std::isinf(state.best);
    const double slack = kDeltaSlack * std::max(1.0, std::abs(val_loss));
    if (first || state.best - val_loss >= cfg.min_delta - slack) {
        state.best = val_loss;
        state.bad_epochs = 0;
        return lr;
    }
    if (++state.bad_epochs < cfg.patience) return lr;
    state.bad_epochs = 0;
    ++state.reductions;
    return std::max(lr * cfg.factor, cfg.min_lr);
}

} // namespace gtpdm::training
