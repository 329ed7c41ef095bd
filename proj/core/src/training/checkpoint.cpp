// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/training/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/features/skeleton.hpp"
#include "../util/binary_io.hpp"

namespace gtpdm::training {
namespace {

using nlohmann::json;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double null_as_inf(const json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

std::vector<features::Edge> graph_edges(const features::SkeletonGraph& g) {
    std::vector<features::Edge> edges;
    for (std::size_t i = 0; i < g.nodes; ++i) {
        for (std::size_t j = i + 1; j < g.nodes; ++j) {
            if (g.adjacency.at(i, j) != 0.0) edges.emplace_back(i, j);
        }
    }
    return edges;
}

void write_tensor(std::ostream& out, const Tensor& t) { util::write_doubles(out, t.data()); }

Tensor read_tensor(std::istream& in, const Shape& shape, const std::string& what) {
    Tensor t = Tensor::uninitialized(shape);
    util::read_doubles(in, t.data(), what);
    return t;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const model::GTransPDM& model, const CheckpointMeta& meta,
                     const TrainState* state) {
    const model::ParameterSet& ps = model.parameters();
    json params = json::array();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        params.push_back({{"name", ps.at(i).name}, {"shape", ps.at(i).value.shape()}, {"trainable", ps.at(i).trainable}});
    }
    json header{{"model", model.config()},
                {"features", meta.features},
                {"train", meta.train},
                {"nodes", model.graph().nodes},
                {"edges", graph_edges(model.graph())},
                {"params", params},
                {"norm", model.skeleton_norm() != nullptr}};
    if (state) {
        header["state"] = {{"epoch", state->epoch},
                           {"lr", state->lr},
                           {"adam_step", state->adam.step},
                           {"adam_tensors", state->adam.m.size()},
                           {"plateau",
                            {{"best", finite_or_null(state->plateau.best)},
                             {"bad_epochs", state->plateau.bad_epochs},
                             {"reductions", state->plateau.reductions}}},
                           {"history", state->history.epochs},
                           {"best_val_loss", finite_or_null(state->best_val_loss)},
                           {"best_epoch", state->best_epoch},
                           {"has_best", !state->best_params.empty()}};
    } else {
        header["state"] = nullptr;
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
        util::write_header(out, kCheckpointMagic, kCheckpointVersion, header);
        for (std::size_t i = 0; i < ps.size(); ++i) write_tensor(out, ps.at(i).value);
        if (const BatchNormState* s = model.skeleton_norm()) {
            write_tensor(out, s->running_mean);
            write_tensor(out, s->running_var);
        }
        if (state) {
            for (std::size_t i = 0; i < state->adam.m.size(); ++i) {
                write_tensor(out, state->adam.m[i]);
                write_tensor(out, state->adam.v[i]);
            }
            if (!state->best_params.empty()) {
                for (const Tensor& t : state->best_params) write_tensor(out, t);
                if (model.skeleton_norm()) {
                    write_tensor(out, state->best_norm.running_mean);
                    write_tensor(out, state->best_norm.running_var);
                }
            }
        }
        if (!out) throw IoError("write failed for checkpoint '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    const std::string what = "checkpoint '" + path.string() + "'";
    const json h = util::read_header(in, kCheckpointMagic, kCheckpointVersion, what);

    LoadedCheckpoint out;
    try {
        const auto cfg = h.at("model").get<model::ModelConfig>();
        out.meta.features = h.at("features").get<data::FeaturizeConfig>();
        out.meta.train = h.at("train").get<TrainConfig>();
        const auto edges = h.at("edges").get<std::vector<features::Edge>>();
        auto graph = features::build_normalized_adjacency(edges, h.at("nodes").get<std::size_t>());
        out.model = std::make_unique<model::GTransPDM>(cfg, std::move(graph), 0);
    } catch (const json::exception& e) {
        throw ValidationError(what + ": corrupt header: " + e.what());
    }

    model::ParameterSet& ps = out.model->parameters();
    const json& params = h.at("params");
    if (params.size() != ps.size()) {
        throw ValidationError(what + ": " + std::to_string(params.size()) + " stored parameters, the model has " +
                              std::to_string(ps.size()));
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Parameter& p = ps.at(i);
        const Shape shape = params[i].at("shape").get<Shape>();
        if (params[i].at("name") != p.name || shape != p.value.shape()) {
            throw ValidationError(what + ": parameter " + std::to_string(i) + " is '" +
                                  params[i].at("name").get<std::string>() + "' " + shape_string(shape) + ", expected '" +
                                  p.name + "' " + shape_string(p.value.shape()));
        }
        p.value = read_tensor(in, shape, what);
        p.trainable = params[i].at("trainable").get<bool>();
    }
    if (BatchNormState* s = out.model->skeleton_norm()) {
        s->running_mean = read_tensor(in, s->running_mean.shape(), what);
        s->running_var = read_tensor(in, s->running_var.shape(), what);
    }

    const json& sj = h.at("state");
    if (!sj.is_null()) {
        TrainState st;
        st.epoch = sj.at("epoch").get<std::size_t>();
        st.lr = sj.at("lr").get<double>();
        st.adam.step = sj.at("adam_step").get<std::uint64_t>();
        st.plateau.best = null_as_inf(sj.at("plateau").at("best"));
        st.plateau.bad_epochs = sj.at("plateau").at("bad_epochs").get<std::size_t>();
        st.plateau.reductions = sj.at("plateau").at("reductions").get<std::size_t>();
        st.history.epochs = sj.at("history").get<std::vector<EpochRecord>>();
        st.best_val_loss = null_as_inf(sj.at("best_val_loss"));
        st.best_epoch = sj.at("best_epoch").get<std::size_t>();

        const std::vector<Parameter*> trainable = ps.trainable();
        if (sj.at("adam_tensors").get<std::size_t>() != trainable.size()) {
            throw ValidationError(what + ": optimizer state does not match the trainable parameters");
        }
        for (const Parameter* p : trainable) {
            st.adam.m.push_back(read_tensor(in, p->value.shape(), what));
            st.adam.v.push_back(read_tensor(in, p->value.shape(), what));
        }
        if (sj.at("has_best").get<bool>()) {
            for (std::size_t i = 0; i < ps.size(); ++i) st.best_params.push_back(read_tensor(in, ps.at(i).value.shape(), what));
            if (const BatchNormState* s = out.model->skeleton_norm()) {
                st.best_norm.running_mean = read_tensor(in, s->running_mean.shape(), what);
                st.best_norm.running_var = read_tensor(in, s->running_var.shape(), what);
            }
        }
        out.state = std::move(st);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(what + ": trailing bytes after payload");
    return out;
}

} // namespace gtpdm::training
