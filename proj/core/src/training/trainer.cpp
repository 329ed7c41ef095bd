// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/training/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/evaluation/evaluate.hpp"
#include "gtpdm/training/checkpoint.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::training {
namespace {

using nlohmann::json;

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng = CounterRng(seed).derive(kShuffleStream).derive(epoch);
    rng.shuffle(order);
    return order;
}

bool grads_finite(std::span<Parameter* const> params) {
    for (const Parameter* p : params) {
        if (!p->grad.all_finite()) return false;
    }
    return true;
}

std::vector<Tensor> snapshot(model::GTransPDM& model) {
    std::vector<Tensor> out;
    for (const Parameter* p : model.parameters().all()) out.push_back(p->value);
    return out;
}

BatchNormState norm_snapshot(model::GTransPDM& model) {
    const BatchNormState* s = model.skeleton_norm();
    return s ? *s : BatchNormState{};
}

} // namespace

std::string to_string(DatasetMode m) { return m == DatasetMode::Pie ? "pie" : "jaad"; }

DatasetMode dataset_mode_from_string(const std::string& s) {
    if (s == "pie") return DatasetMode::Pie;
    if (s == "jaad") return DatasetMode::Jaad;
    throw ConfigError("unknown dataset mode '" + s + "', expected pie or jaad");
}

std::string to_string(CheckpointSelect s) { return s == CheckpointSelect::BestValLoss ? "best_val_loss" : "last"; }

CheckpointSelect checkpoint_select_from_string(const std::string& s) {
    if (s == "best_val_loss") return CheckpointSelect::BestValLoss;
    if (s == "last") return CheckpointSelect::Last;
    throw ConfigError("unknown checkpoint selection '" + s + "', expected best_val_loss or last");
}

TrainConfig TrainConfig::for_mode(DatasetMode mode) {
    TrainConfig c;
    c.mode = mode;
    if (mode == DatasetMode::Jaad) {
        c.batch_size = 64;
        c.optimizer = OptimizerKind::AdamW;
        c.lr = 5e-5;
        c.scheduler = SchedulerKind::Constant;
    }
    return c;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
        throw ConfigError("train.adam: betas must lie in [0, 1) and eps must be positive");
    }
    if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("train.grad_clip must be positive when set");
    plateau.validate();
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"mode", to_string(c.mode)},
             {"epochs", c.epochs},
             {"batch_size", c.batch_size},
             {"optimizer", to_string(c.optimizer)},
             {"lr", c.lr},
             {"weight_decay", c.weight_decay},
             {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
             {"scheduler", to_string(c.scheduler)},
             {"plateau",
              {{"factor", c.plateau.factor},
               {"patience", c.plateau.patience},
               {"min_delta", c.plateau.min_delta},
               {"min_lr", c.plateau.min_lr}}},
             {"grad_clip", c.grad_clip ? json(*c.grad_clip) : json(nullptr)},
             {"select", to_string(c.select)},
             {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
    util::FieldReader r(j, "train");
    std::string s;
    if (r.read("mode", s)) c = TrainConfig::for_mode(dataset_mode_from_string(s));
    r.read("epochs", c.epochs);
    r.read("batch_size", c.batch_size);
    if (r.read("optimizer", s)) c.optimizer = optimizer_from_string(s);
    r.read("lr", c.lr);
    r.read("weight_decay", c.weight_decay);
    if (const json* a = r.get("adam")) {
        util::FieldReader ar(*a, "train.adam");
        ar.read("beta1", c.adam.beta1);
        ar.read("beta2", c.adam.beta2);
        ar.read("eps", c.adam.eps);
        ar.finish();
    }
    if (r.read("scheduler", s)) c.scheduler = scheduler_from_string(s);
    if (const json* p = r.get("plateau")) {
        util::FieldReader pr(*p, "train.plateau");
        pr.read("factor", c.plateau.factor);
        pr.read("patience", c.plateau.patience);
        pr.read("min_delta", c.plateau.min_delta);
        pr.read("min_lr", c.plateau.min_lr);
        pr.finish();
    }
    if (const json* g = r.get("grad_clip")) {
        if (g->is_null()) c.grad_clip.reset();
        else if (g->is_number()) c.grad_clip = g->get<double>();
        else throw ConfigError("train.grad_clip: wrong type (" + g->dump() + ")");
    }
    if (r.read("select", s)) c.select = checkpoint_select_from_string(s);
    r.read("seed", c.seed);
    r.finish();
    c.validate();
}

void to_json(json& j, const EpochRecord& r) {
    j = json{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}, {"lr", r.lr}, {"val", r.val}};
}

void from_json(const json& j, EpochRecord& r) {
    j.at("epoch").get_to(r.epoch);
    j.at("train_loss").get_to(r.train_loss);
    j.at("val_loss").get_to(r.val_loss);
    j.at("lr").get_to(r.lr);
    j.at("val").get_to(r.val);
}

void write_history_jsonl(std::ostream& out, const TrainHistory& h) {
    for (const auto& e : h.epochs) out << json(e).dump() << '\n';
}

TrainState train(model::GTransPDM& model, const data::Dataset& train_set, const data::Dataset& val_set,
                 const TrainConfig& cfg, const TrainOptions& opts, std::optional<TrainState> resume) {
    cfg.validate();
    if (train_set.size() == 0) throw ValidationError("training split is empty");
    if (val_set.size() == 0) throw ValidationError("validation split is empty");
    data::check_compatible(train_set, model.config());
    data::check_compatible(val_set, model.config());

    const std::vector<Parameter*> params = model.parameters().trainable();
    TrainState st;
    if (resume) {
        st = std::move(*resume);
        if (st.epoch > cfg.epochs) {
            throw ConfigError("resume state has " + std::to_string(st.epoch) + " epochs, more than the configured " +
                              std::to_string(cfg.epochs));
        }
    } else {
        st.lr = cfg.lr;
        st.adam = AdamState::zeros(params);
        st.best_val_loss = std::numeric_limits<double>::infinity();
    }
    const std::vector<int> val_labels = val_set.labels();
    const std::size_t last = std::min(cfg.epochs, opts.stop_after.value_or(cfg.epochs));

    while (st.epoch < last) {
        EpochRecord rec;
        rec.epoch = st.epoch + 1;
        rec.lr = st.lr;
        const std::vector<std::size_t> order = epoch_order(train_set.size(), cfg.seed, st.epoch);
        CounterRng dropout = CounterRng(cfg.seed).derive(kDropoutStream).derive(st.epoch);
        double loss_sum = 0.0;
        for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const model::ModelInput batch = data::make_batch(train_set, std::span(order).subspan(start, n));
            const auto where = [&] {
                return "epoch " + std::to_string(rec.epoch) + ", batch " + std::to_string(b) + ", lr " +
                       std::to_string(st.lr);
            };
            double loss = 0.0;
            try {
                model.parameters().zero_grad();
                Tape tape;
                model::ForwardOptions fo;
                fo.training = true;
                fo.rng = &dropout;
                Var l = model.loss(tape, batch, fo);
                loss = l.value()[0];
                tape.backward(l);
            } catch (const NumericError& e) {
                throw TrainingError("training diverged at " + where() + ": " + e.what());
            }
            if (!std::isfinite(loss) || !grads_finite(params)) {
                throw TrainingError("training diverged at " + where() + ": non-finite loss or gradient (loss " +
                                    std::to_string(loss) + ")");
            }
            if (cfg.grad_clip) clip_grad_norm(params, *cfg.grad_clip);
            if (cfg.optimizer == OptimizerKind::Adam) adam_step(params, st.adam, st.lr, cfg.weight_decay, cfg.adam);
            else adamw_step(params, st.adam, st.lr, cfg.weight_decay, cfg.adam);
            loss_sum += loss * static_cast<double>(n);
        }
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());

        const Tensor probs = evaluation::predict_probabilities(model, val_set);
        rec.val_loss = evaluation::mean_cross_entropy(probs, val_labels);
        rec.val = evaluation::compute_metrics(evaluation::cross_scores(probs), val_labels);
        if (!std::isfinite(rec.train_loss)) throw TrainingError("training diverged in epoch " + std::to_string(rec.epoch));

        if (cfg.scheduler == SchedulerKind::ReduceOnPlateau) {
            st.lr = reduce_on_plateau(st.plateau, cfg.plateau, st.lr, rec.val_loss);
        }
        const bool improved = rec.val_loss < st.best_val_loss;
        if (improved) {
            st.best_val_loss = rec.val_loss;
            st.best_epoch = rec.epoch;
            st.best_params = snapshot(model);
            st.best_norm = norm_snapshot(model);
        }
        ++st.epoch;
        st.history.epochs.push_back(rec);

        if (opts.checkpoint_dir) {
            std::filesystem::create_directories(*opts.checkpoint_dir);
            save_checkpoint(*opts.checkpoint_dir / "last.ckpt", model, opts.meta, &st);
            if (improved) save_checkpoint(*opts.checkpoint_dir / "best.ckpt", model, opts.meta);
        }
        if (opts.on_epoch) opts.on_epoch(rec);
    }
    return st;
}

void restore_best(model::GTransPDM& model, const TrainState& state) {
    if (state.best_epoch == 0) throw TrainingError("no completed epoch to restore");
    const std::vector<Parameter*> all = model.parameters().all();
    if (all.size() != state.best_params.size()) {
        throw DimensionError("best snapshot holds " + std::to_string(state.best_params.size()) + " tensors for " +
                             std::to_string(all.size()) + " parameters");
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i]->value.shape() != state.best_params[i].shape()) {
            throw DimensionError("best snapshot shape mismatch for '" + all[i]->name + "'");
        }
        all[i]->value = state.best_params[i];
    }
    if (BatchNormState* s = model.skeleton_norm()) *s = state.best_norm;
}

void apply_selection(model::GTransPDM& model, const TrainState& state, const TrainConfig& cfg) {
    if (cfg.select == CheckpointSelect::BestValLoss) restore_best(model, state);
}

} // namespace gtpdm::training
