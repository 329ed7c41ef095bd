// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/model/parameters.hpp"

#include "gtpdm/errors.hpp"

namespace gtpdm::model {

const char* to_string(ParamGroup g) {
    switch (g) {
    case ParamGroup::Position: return "position";
    case ParamGroup::Ego: return "ego";
    case ParamGroup::Skeleton: return "skeleton";
    case ParamGroup::Fusion: return "fusion";
    case ParamGroup::Transformer: return "transformer";
    case ParamGroup::Head: return "head";
    }
    return "?";
}

Parameter& ParameterSet::add(std::string name, Tensor init, ParamGroup group) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    params_.emplace_back(std::move(name), std::move(init));
    groups_.push_back(group);
    return params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("no parameter named '" + name + "'");
    return params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->get(name);
}

std::vector<Parameter*> ParameterSet::all() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

std::vector<Parameter*> ParameterSet::trainable() {
    std::vector<Parameter*> out;
    for (auto& p : params_) {
        if (p.trainable) out.push_back(&p);
    }
    return out;
}

std::size_t ParameterSet::count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::size_t ParameterSet::count(ParamGroup g) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (groups_[i] == g) n += params_[i].value.size();
    }
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

} // namespace gtpdm::model
