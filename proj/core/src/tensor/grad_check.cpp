// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "gtpdm/errors.hpp"

namespace gtpdm {
namespace {

double evaluate(const LossBuilder& f) {
    Tape tape(false);
    const Var loss = f(tape);
    if (loss.value().size() != 1) throw TapeError("grad_check: loss is not scalar");
    return loss.value()[0];
}

} // namespace

GradCheckReport grad_check(const LossBuilder& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape(true);
        const Var loss = f(tape);
        tape.backward(loss);
    }
    GradCheckReport report;
    for (Parameter* p : params) {
        const std::size_t n = p->value.size();
        std::vector<std::size_t> picks;
        if (options.max_entries_per_param == 0 || n <= options.max_entries_per_param) {
            for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
        } else {
            const std::size_t k = options.max_entries_per_param;
            for (std::size_t j = 0; j < k; ++j) picks.push_back((j * (n - 1)) / (k - 1));
        }
        double max_diff = 0.0, scale = options.scale_floor;
        std::size_t refined = 0;
        for (std::size_t i : picks) {
            const double original = p->value[i];
            const auto central = [&](double h) {
                p->value[i] = original + h;
                const double up = evaluate(f);
                p->value[i] = original - h;
                const double down = evaluate(f);
                p->value[i] = original;
                return (up - down) / (2.0 * h);
            };
            const double analytic = p->grad[i];
            const auto mismatch = [&](double n) {
                return std::abs(analytic - n) > options.refine_threshold * std::max(std::abs(analytic), std::abs(n));
            };
            double numeric = central(options.step);
            if (mismatch(numeric)) {
                double h = options.step;
                for (std::size_t level = 0; level < options.refine_levels; ++level) {
                    h /= 10.0;
                    const double n = central(h);
                    if (std::abs(analytic - n) < std::abs(analytic - numeric)) numeric = n;
                }
                ++refined;
            }
            max_diff = std::max(max_diff, std::abs(analytic - numeric));
            scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
        }
        GradCheckEntry e{p->name, max_diff / scale, scale, picks.size(), refined};
        report.max_relative_error = std::max(report.max_relative_error, e.max_relative_error);
        report.refined += refined;
        report.params.push_back(std::move(e));
    }
    return report;
}

} // namespace gtpdm
