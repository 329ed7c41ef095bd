// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "gtpdm/tensor/tape.hpp"

namespace gtpdm::model {

enum class ParamGroup { Position, Ego, Skeleton, Fusion, Transformer, Head };

const char* to_string(ParamGroup g);

/// Named parameters in registration order. Addresses are stable for the
/// lifetime of the set.
class ParameterSet {
public:
    Parameter& add(std::string name, Tensor init, ParamGroup group);

    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const noexcept { return params_.size(); }
    Parameter& at(std::size_t i) { return params_[i]; }
    const Parameter& at(std::size_t i) const { return params_[i]; }
    ParamGroup group(std::size_t i) const { return groups_[i]; }

    std::vector<Parameter*> all();
    std::vector<Parameter*> trainable();

    /// Scalar count over every parameter, or over one group.
    std::size_t count() const;
    std::size_t count(ParamGroup g) const;

    void zero_grad();

private:
    std::deque<Parameter> params_;
    std::vector<ParamGroup> groups_;
    std::map<std::string, std::size_t> index_;
};

} // namespace gtpdm::model
