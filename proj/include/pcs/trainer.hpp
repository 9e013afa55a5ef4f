#ifndef PCS_TRAINER_HPP
#define PCS_TRAINER_HPP

// Training loops for the simplification network and the saliency regressor.
//
// One Adam step per patch, patches visited in a freshly shuffled order each
// epoch. Everything that influences the trajectory (weights, Adam moments,
// the shuffle generator, the epoch counter) is written to checkpoints, so a
// resumed run reproduces the uninterrupted one bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcs/autodiff.hpp"
#include "pcs/checkpoint.hpp"
#include "pcs/error.hpp"
#include "pcs/losses.hpp"
#include "pcs/network.hpp"
#include "pcs/patching.hpp"
#include "pcs/rng.hpp"

namespace pcs {

// ---------------------------------------------------------------- configuration

struct TrainConfig {
    std::size_t epochs = 200;
    double t_start = 1.0;
    double t_end = 0.1;
    /// Ramp endpoints; default to 60% and 80% of `epochs` (at least one epoch wide).
    std::optional<std::size_t> anneal_begin;
    std::optional<std::size_t> anneal_end;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    LossWeights weights;
    PcsNetConfig network;

    std::size_t ramp_begin() const { return anneal_begin.value_or(epochs * 3 / 5); }
    std::size_t ramp_end() const { return anneal_end.value_or(std::max(epochs * 4 / 5, ramp_begin() + 1)); }
};

struct SaliencyTrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    SaliencyNetConfig network;
};

namespace train_detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known) {
    if (!j.is_object()) fail(ErrorKind::usage, "bad-config", "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) fail(ErrorKind::usage, "bad-config", "unknown config key '" + key + "'");
    }
}

} // namespace train_detail

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"t_start", c.t_start},
         {"t_end", c.t_end},
         {"anneal_begin", c.ramp_begin()},
         {"anneal_end", c.ramp_end()},
         {"learning_rate", c.learning_rate},
         {"seed", c.seed},
         {"alpha", c.weights.alpha},
         {"beta", c.weights.beta},
         {"loss_mode", std::string(to_string(c.weights.mode))},
         {"network", c.network}};
}

inline void validate(const TrainConfig& c) {
    validate(c.network);
    if (!(c.t_end > 0.0) || !(c.t_start >= c.t_end))
        fail(ErrorKind::usage, "bad-config", "need t_start >= t_end > 0");
    if (c.epochs > 0 && !(c.ramp_begin() < c.ramp_end() && c.ramp_end() <= c.epochs))
        fail(ErrorKind::usage, "bad-config", "need anneal_begin < anneal_end <= epochs");
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::usage, "bad-config", "learning_rate must be positive");
    if (!(c.weights.alpha > 0.0) || !(c.weights.beta > 0.0))
        fail(ErrorKind::usage, "bad-config", "alpha and beta must be positive");
}

inline TrainConfig parse_train_config(const nlohmann::json& j) {
    train_detail::reject_unknown(j, {"epochs", "t_start", "t_end", "anneal_begin", "anneal_end", "learning_rate", "seed",
                                     "alpha", "beta", "loss_mode", "network"});
    TrainConfig c;
    try {
        c.epochs = j.value("epochs", c.epochs);
        c.t_start = j.value("t_start", c.t_start);
        c.t_end = j.value("t_end", c.t_end);
        if (j.contains("anneal_begin")) c.anneal_begin = j.at("anneal_begin").get<std::size_t>();
        if (j.contains("anneal_end")) c.anneal_end = j.at("anneal_end").get<std::size_t>();
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.seed = j.value("seed", c.seed);
        c.weights.alpha = j.value("alpha", c.weights.alpha);
        c.weights.beta = j.value("beta", c.weights.beta);
        if (j.contains("loss_mode")) c.weights.mode = parse_loss_mode(j.at("loss_mode").get<std::string>());
        if (j.contains("network")) c.network = j.at("network").get<PcsNetConfig>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::usage, "bad-config", e.what());
    }
    validate(c);
    return c;
}

inline void to_json(nlohmann::json& j, const SaliencyTrainConfig& c) {
    j = {{"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"seed", c.seed}, {"network", c.network}};
}

inline SaliencyTrainConfig parse_saliency_train_config(const nlohmann::json& j) {
    train_detail::reject_unknown(j, {"epochs", "learning_rate", "seed", "network"});
    SaliencyTrainConfig c;
    try {
        c.epochs = j.value("epochs", c.epochs);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.seed = j.value("seed", c.seed);
        if (j.contains("network")) c.network = j.at("network").get<SaliencyNetConfig>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::usage, "bad-config", e.what());
    }
    validate(c.network);
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::usage, "bad-config", "learning_rate must be positive");
    return c;
}

/// 64-bit FNV-1a over the canonical JSON dump.
inline std::uint64_t config_hash(const nlohmann::json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// t_start before the ramp, linear to t_end across [anneal_begin, anneal_end), t_end after.
inline double temperature_at(std::size_t epoch, const TrainConfig& c) {
    const std::size_t b = c.ramp_begin(), e = c.ramp_end();
    if (epoch < b) return c.t_start;
    if (epoch >= e) return c.t_end;
    const double u = static_cast<double>(epoch - b) / static_cast<double>(e - b);
    return c.t_start + (c.t_end - c.t_start) * u;
}

// ---------------------------------------------------------------- optimizer

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t steps = 0;
    std::vector<Tensor> m, v;

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
        if (m.empty()) {
            for (const auto* p : params) {
                m.emplace_back(p->rows, p->cols);
                v.emplace_back(p->rows, p->cols);
            }
        }
        ++steps;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
        for (std::size_t t = 0; t < params.size(); ++t) {
            auto& p = params[t]->data;
            const auto& g = grads[t].data;
            auto& mt = m[t].data;
            auto& vt = v[t].data;
            for (std::size_t i = 0; i < p.size(); ++i) {
                mt[i] = beta1 * mt[i] + (1.0 - beta1) * g[i];
                vt[i] = beta2 * vt[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (mt[i] / c1) / (std::sqrt(vt[i] / c2) + eps);
            }
        }
    }
};

// ---------------------------------------------------------------- logs

struct EpochLog {
    std::size_t epoch = 0;
    double reconstruction = 0.0;
    double coverage = 0.0; // spread or saliency term
    double repulsion = 0.0;
    double total = 0.0;
    double temperature = 0.0;

    friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

inline void to_json(nlohmann::json& j, const EpochLog& e) {
    j = nlohmann::json::array({e.epoch, e.reconstruction, e.coverage, e.repulsion, e.total, e.temperature});
}
inline void from_json(const nlohmann::json& j, EpochLog& e) {
    e = {j.at(0).get<std::size_t>(), j.at(1).get<double>(), j.at(2).get<double>(),
         j.at(3).get<double>(),      j.at(4).get<double>(), j.at(5).get<double>()};
}

/// CSV with header epoch,L_r,L_sp_or_s,L_rep,L,t.
inline std::string format_train_log(const std::vector<EpochLog>& log) {
    std::string out = "epoch,L_r,L_sp_or_s,L_rep,L,t\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch);
        for (const double v : {e.reconstruction, e.coverage, e.repulsion, e.total, e.temperature}) {
            out += ',';
            io_detail::append_double(out, v);
        }
        out += '\n';
    }
    return out;
}

/// CSV with header epoch,mse.
inline std::string format_saliency_log(const std::vector<EpochLog>& log) {
    std::string out = "epoch,mse\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch) + ',';
        io_detail::append_double(out, e.total);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------- shared loop

namespace train_detail {

struct PreparedPatch {
    Tensor input;                  // n x 3, in the patch frame
    Tensor target;                 // n x 3, loss points in the same frame
    std::optional<Tensor> weights; // n x 1 saliency
};

inline void check_patches(const std::vector<Patch>& patches) {
    if (patches.empty()) fail(ErrorKind::usage, "no-patches", "training needs at least one patch");
    const std::size_t n = patches.front().size();
    for (const auto& p : patches) {
        if (p.size() != n) fail(ErrorKind::data, "ragged-patches", "all patches must have the same input size");
        if (p.target_points && p.target_points->size() != n)
            fail(ErrorKind::data, "ragged-patches", "target points not aligned with inputs");
        if (p.input_saliency && p.input_saliency->size() != n)
            fail(ErrorKind::data, "ragged-patches", "saliency not aligned with inputs");
    }
}

inline void save_adam(Checkpoint& c, const Adam& adam, const std::vector<std::string>& names) {
    c.metadata["training"]["adam_steps"] = adam.steps;
    for (std::size_t i = 0; i < adam.m.size(); ++i) {
        c.tensors.emplace_back("adam.m." + names[i], adam.m[i]);
        c.tensors.emplace_back("adam.v." + names[i], adam.v[i]);
    }
}

inline void load_adam(const Checkpoint& c, Adam& adam, const std::vector<std::string>& names) {
    adam.steps = c.metadata.at("training").at("adam_steps").get<std::uint64_t>();
    adam.m.clear();
    adam.v.clear();
    if (adam.steps == 0) return;
    for (const auto& n : names) {
        adam.m.push_back(c.tensor("adam.m." + n));
        adam.v.push_back(c.tensor("adam.v." + n));
    }
}

/// Drops optimizer tensors so the checkpoint loads as plain parameters.
inline Checkpoint params_only(Checkpoint c) {
    std::erase_if(c.tensors, [](const auto& t) { return t.first.starts_with("adam."); });
    return c;
}

template <class Params>
std::vector<std::string> param_names(Params& p) {
    std::vector<std::string> names;
    for (auto& [name, t] : named_parameters(p.weights)) names.push_back(name);
    return names;
}

template <class Params>
std::vector<Tensor*> param_ptrs(Params& p) {
    std::vector<Tensor*> ptrs;
    for (auto& [name, t] : named_parameters(p.weights)) ptrs.push_back(t);
    return ptrs;
}

[[noreturn]] inline void non_finite(std::size_t epoch, std::size_t patch) {
    fail(ErrorKind::numerical, "non-finite-loss",
         "loss is not finite at epoch " + std::to_string(epoch) + ", patch " + std::to_string(patch));
}

} // namespace train_detail

// ---------------------------------------------------------------- simplification network

class PcsTrainer {
public:
    /// Fresh run: weights initialized from the seed. The network's patch size is
    /// taken from the patches.
    PcsTrainer(TrainConfig config, const std::vector<Patch>& patches)
        : config_(std::move(config)), shuffle_(Rng(config_.seed).split(2)) {
        train_detail::check_patches(patches);
        config_.network.patch_size = patches.front().size();
        validate(config_);
        Rng init = Rng(config_.seed).split(1);
        params_ = init_pcs_net(config_.network, init);
        adam_.lr = config_.learning_rate;
        prepare(patches);
    }

    /// Continues a run from a checkpoint written by `checkpoint()`.
    static PcsTrainer resume(TrainConfig config, const std::vector<Patch>& patches, const Checkpoint& ckpt) {
        PcsTrainer t(std::move(config), patches);
        const auto& training = ckpt.metadata.at("training");
        if (training.at("config_hash").get<std::uint64_t>() != t.hash())
            fail(ErrorKind::usage, "config-mismatch", "checkpoint was written with a different training config");
        t.params_ = pcs_params_from_checkpoint(train_detail::params_only(ckpt));
        t.epoch_ = training.at("epoch").get<std::size_t>();
        t.shuffle_ = Rng::restore(training.at("rng_state").get<std::string>());
        t.log_ = training.at("log").get<std::vector<EpochLog>>();
        train_detail::load_adam(ckpt, t.adam_, train_detail::param_names(t.params_));
        return t;
    }

    std::size_t epoch() const { return epoch_; }
    bool done() const { return epoch_ >= config_.epochs; }
    const PcsNetParams& params() const { return params_; }
    const std::vector<EpochLog>& log() const { return log_; }
    const TrainConfig& config() const { return config_; }

    std::uint64_t hash() const { return config_hash(nlohmann::json(config_)); }

    /// One pass over all patches; returns the epoch's mean losses.
    EpochLog run_epoch() {
        const double t = temperature_at(epoch_, config_);
        std::vector<std::size_t> order(patches_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_.shuffle(std::span<std::size_t>(order));

        EpochLog e;
        e.epoch = epoch_;
        e.temperature = t;
        auto ptrs = train_detail::param_ptrs(params_);
        for (const auto idx : order) {
            Graph g;
            const auto w = bind(g, params_.weights, true);
            const auto& patch = patches_[idx];
            const Var p = g.constant(patch.input);
            const Var target = g.constant(patch.target);
            const Selection sel = simplify(p, w, params_.config, t);
            const Var q = resample(p, sel, w, params_.config);
            std::optional<Var> s;
            if (patch.weights) s = g.constant(*patch.weights);
            const LossTerms terms = loss_joint_terms(q, target, s ? &*s : nullptr, config_.weights);
            const double total = terms.total.value().item();
            if (!std::isfinite(total)) train_detail::non_finite(epoch_, idx);
            g.backward(terms.total);
            std::vector<Tensor> grads;
            for (auto& [name, grad] : gradients(w)) grads.push_back(std::move(grad));
            adam_.step(ptrs, grads);

            e.reconstruction += terms.reconstruction.value().item();
            e.coverage += terms.coverage.value().item();
            e.repulsion += terms.repulsion.value().item();
            e.total += total;
        }
        const double count = static_cast<double>(patches_.size());
        e.reconstruction /= count;
        e.coverage /= count;
        e.repulsion /= count;
        e.total /= count;
        log_.push_back(e);
        ++epoch_;
        return e;
    }

    void run() {
        while (!done()) run_epoch();
    }

    /// Mean losses of the current parameters at temperature t, no update.
    EpochLog evaluate(double t) const {
        EpochLog e;
        e.temperature = t;
        e.epoch = epoch_;
        for (const auto& patch : patches_) {
            Graph g;
            const auto w = bind(g, params_.weights, false);
            const Var p = g.constant(patch.input);
            const Selection sel = simplify(p, w, params_.config, t);
            const Var q = resample(p, sel, w, params_.config);
            std::optional<Var> s;
            if (patch.weights) s = g.constant(*patch.weights);
            const LossTerms terms = loss_joint_terms(q, g.constant(patch.target), s ? &*s : nullptr, config_.weights);
            e.reconstruction += terms.reconstruction.value().item();
            e.coverage += terms.coverage.value().item();
            e.repulsion += terms.repulsion.value().item();
            e.total += terms.total.value().item();
        }
        const double count = static_cast<double>(patches_.size());
        e.reconstruction /= count;
        e.coverage /= count;
        e.repulsion /= count;
        e.total /= count;
        return e;
    }

    Checkpoint checkpoint() const {
        Checkpoint c = to_checkpoint(params_);
        auto& training = c.metadata["training"];
        training["epoch"] = epoch_;
        training["config_hash"] = hash();
        training["config"] = config_;
        training["rng_state"] = shuffle_.state();
        training["log"] = log_;
        auto copy = params_;
        train_detail::save_adam(c, adam_, train_detail::param_names(copy));
        return c;
    }

private:
    void prepare(const std::vector<Patch>& patches) {
        const bool saliency = config_.weights.mode == LossMode::saliency;
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const auto& src = patches[i];
            if (saliency && !src.input_saliency)
                fail(ErrorKind::usage, "missing-saliency", "patch " + std::to_string(i) + " has no saliency");
            const PatchFrame f = patch_frame(src.input_points, config_.network);
            train_detail::PreparedPatch p;
            p.input = points_to_tensor(to_local(f, src.input_points));
            p.target = points_to_tensor(to_local(f, src.loss_points()));
            // Saliency is a length, so it shares the patch scale.
            if (saliency) {
                p.weights = column(*src.input_saliency);
                for (auto& v : p.weights->data) v /= f.scale;
            }
            patches_.push_back(std::move(p));
        }
    }

    TrainConfig config_;
    Rng shuffle_;
    PcsNetParams params_;
    Adam adam_;
    std::size_t epoch_ = 0;
    std::vector<EpochLog> log_;
    std::vector<train_detail::PreparedPatch> patches_;
};

struct PcsTrainResult {
    PcsNetParams params;
    std::vector<EpochLog> log;
};

inline PcsTrainResult train_pcs(const std::vector<Patch>& patches, const TrainConfig& config) {
    PcsTrainer t(config, patches);
    t.run();
    return {t.params(), t.log()};
}

// ---------------------------------------------------------------- saliency network

/// Regresses per-point saliency with mean squared error. Patches are centered
/// (not scaled) so targets keep their units.
class SaliencyTrainer {
public:
    SaliencyTrainer(SaliencyTrainConfig config, const std::vector<Patch>& patches)
        : config_(std::move(config)), shuffle_(Rng(config_.seed).split(2)) {
        train_detail::check_patches(patches);
        Rng init = Rng(config_.seed).split(1);
        params_ = init_saliency_net(config_.network, init);
        adam_.lr = config_.learning_rate;
        for (std::size_t i = 0; i < patches.size(); ++i) {
            const auto& src = patches[i];
            if (!src.input_saliency)
                fail(ErrorKind::usage, "missing-saliency", "patch " + std::to_string(i) + " has no saliency targets");
            PatchFrame f;
            f.center = centroid(src.input_points);
            inputs_.push_back(points_to_tensor(to_local(f, src.input_points)));
            targets_.push_back(column(*src.input_saliency));
        }
    }

    static SaliencyTrainer resume(SaliencyTrainConfig config, const std::vector<Patch>& patches, const Checkpoint& ckpt) {
        SaliencyTrainer t(std::move(config), patches);
        const auto& training = ckpt.metadata.at("training");
        if (training.at("config_hash").get<std::uint64_t>() != t.hash())
            fail(ErrorKind::usage, "config-mismatch", "checkpoint was written with a different training config");
        t.params_ = saliency_params_from_checkpoint(train_detail::params_only(ckpt));
        t.epoch_ = training.at("epoch").get<std::size_t>();
        t.shuffle_ = Rng::restore(training.at("rng_state").get<std::string>());
        t.log_ = training.at("log").get<std::vector<EpochLog>>();
        train_detail::load_adam(ckpt, t.adam_, train_detail::param_names(t.params_));
        return t;
    }

    std::size_t epoch() const { return epoch_; }
    bool done() const { return epoch_ >= config_.epochs; }
    const SaliencyNetParams& params() const { return params_; }
    const std::vector<EpochLog>& log() const { return log_; }
    std::uint64_t hash() const { return config_hash(nlohmann::json(config_)); }

    EpochLog run_epoch() {
        std::vector<std::size_t> order(inputs_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_.shuffle(std::span<std::size_t>(order));
        EpochLog e;
        e.epoch = epoch_;
        auto ptrs = train_detail::param_ptrs(params_);
        for (const auto idx : order) {
            Graph g;
            const auto w = bind(g, params_.weights, true);
            const Var pred = predict_saliency(g.constant(inputs_[idx]), w, params_.config);
            const Var loss = reduce_mean(square(sub(pred, g.constant(targets_[idx]))));
            const double value = loss.value().item();
            if (!std::isfinite(value)) train_detail::non_finite(epoch_, idx);
            g.backward(loss);
            std::vector<Tensor> grads;
            for (auto& [name, grad] : gradients(w)) grads.push_back(std::move(grad));
            adam_.step(ptrs, grads);
            e.total += value;
        }
        e.total /= static_cast<double>(inputs_.size());
        log_.push_back(e);
        ++epoch_;
        return e;
    }

    void run() {
        while (!done()) run_epoch();
    }

    Checkpoint checkpoint() const {
        Checkpoint c = to_checkpoint(params_);
        auto& training = c.metadata["training"];
        training["epoch"] = epoch_;
        training["config_hash"] = hash();
        training["config"] = config_;
        training["rng_state"] = shuffle_.state();
        training["log"] = log_;
        auto copy = params_;
        train_detail::save_adam(c, adam_, train_detail::param_names(copy));
        return c;
    }

private:
    SaliencyTrainConfig config_;
    Rng shuffle_;
    SaliencyNetParams params_;
    Adam adam_;
    std::size_t epoch_ = 0;
    std::vector<EpochLog> log_;
    std::vector<Tensor> inputs_, targets_;
};

inline SaliencyNetParams train_saliency_net(const std::vector<Patch>& patches, const SaliencyTrainConfig& config) {
    SaliencyTrainer t(config, patches);
    t.run();
    return t.params();
}

/// Saliency prediction for a whole cloud, cell by cell in the centered frame
/// used during training. Cells smaller than the extractor's neighborhood are
/// padded with their nearest outside points.
inline std::vector<double> predict_cloud_saliency(const SaliencyNetParams& params, const Partition& partition,
                                                  const PointCloud& cloud) {
    const std::size_t g = params.config.extractor.neighbors;
    if (cloud.size() < g)
        fail(ErrorKind::usage, "cloud-too-small", "cloud has fewer points than the extractor neighborhood");
    std::optional<KnnIndex> index;
    std::vector<double> out(cloud.size(), 0.0);
    for (const auto& cell : partition.cells()) {
        std::vector<Point3> pts;
        pts.reserve(std::max(cell.size(), g));
        for (const auto i : cell) pts.push_back(cloud[i]);
        if (pts.size() < g) {
            if (!index) index.emplace(cloud.points());
            for (const auto& nb : index->knn(cloud[cell.front()], g + cell.size())) {
                if (pts.size() == g) break;
                if (std::find(cell.begin(), cell.end(), nb.index) == cell.end()) pts.push_back(cloud[nb.index]);
            }
        }
        PatchFrame f;
        f.center = centroid(pts);
        const auto s = run_saliency_net(params, to_local(f, pts));
        for (std::size_t j = 0; j < cell.size(); ++j) out[cell[j]] = s[j];
    }
    return out;
}

} // namespace pcs

#endif
