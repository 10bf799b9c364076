#include "flearn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "flearn/metrics.hpp"
#include "flearn/rng.hpp"

namespace flearn {

void TrainConfig::validate(bool allow_snapshots) const {
    if (!(learning_rate >= 0)) throw std::invalid_argument("train: learning_rate must be >= 0");
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (!(eval_threshold > 0 && eval_threshold < 1)) {
        throw std::invalid_argument("train: eval_threshold must lie in (0,1)");
    }
    if (steps_per_epoch < 1) throw std::invalid_argument("train: steps_per_epoch must be >= 1");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
        throw std::invalid_argument("train: betas must lie in [0,1)");
    }
    for (int e : snapshot_epochs) {
        if (!allow_snapshots) throw std::invalid_argument("train: snapshots not supported here");
        if (e < 1 || e > epochs) {
            throw std::invalid_argument("train: snapshot epoch " + std::to_string(e) +
                                        " outside [1," + std::to_string(epochs) + "]");
        }
    }
}

// Saturation handling: the log terms are clamped at -100 and the derivative's
// denominator is floored at 1e-12, so a fully saturated map still receives a
// restoring gradient instead of locking in.
constexpr double kBceLogFloor = -100.0;
constexpr double kBceDenFloor = 1e-12;

VarPtr bce_loss(const VarPtr& pred, const Tensor& target) {
    if (!pred) throw std::invalid_argument("bce_loss: null prediction");
    if (!pred->value.same_shape(target)) {
        throw std::invalid_argument("bce_loss: shapes differ: " +
                                    shape_to_string(pred->value.shape()) + " vs " +
                                    shape_to_string(target.shape()));
    }
    const std::size_t n = pred->value.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred->value[i];
        const double t = target[i];
        acc -= t * std::max(std::log(p), kBceLogFloor) +
               (1.0 - t) * std::max(std::log1p(-p), kBceLogFloor);
    }
    Tensor tcopy = target;
    return make_node(Tensor::scalar(acc * inv_n), {pred},
                     [inv_n, tcopy = std::move(tcopy)](Var& self) {
                         Var& pv = *self.parents[0];
                         if (!pv.requires_grad) return;
                         const double g = self.grad[0] * inv_n;
                         double* gp = pv.ensure_grad().data();
                         for (std::size_t i = 0; i < pv.value.size(); ++i) {
                             const double p = pv.value[i];
                             const double den = std::max(p * (1.0 - p), kBceDenFloor);
                             gp[i] += g * (p - tcopy[i]) / den;
                         }
                     });
}

Adam::Adam(std::vector<VarPtr> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const VarPtr& p : params_) {
        if (!p) throw std::invalid_argument("adam: null parameter");
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Var& p = *params_[i];
        const double* g = p.ensure_grad().data();
        double* m = m_[i].data();
        double* v = v_[i].data();
        double* w = p.value.data();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() { flearn::zero_grad(params_); }

void init_weights(Model& model, std::uint64_t seed) {
    Rng rng(seed);
    for (const VarPtr& p : model.params) {
        const std::string& name = p->name;
        auto ends_with = [&name](const char* suffix) {
            const std::size_t n = std::string(suffix).size();
            return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
        };
        if (ends_with(".weight")) {
            // fan_in = Cin * kh * kw for [Cout,Cin,kh,kw] weights
            const std::size_t fan_in = p->value.size() / static_cast<std::size_t>(p->value.dim(0));
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                p->value[i] = rng.uniform(-bound, bound);
            }
        } else if (ends_with(".gamma")) {
            p->value.fill(1.0);
        } else {  // .bias / .beta
            p->value.fill(0.0);
        }
    }
}

namespace {

// Round-trips a value through the CSV's fixed 6-decimal formatting so that
// in-memory metrics equal their exported representation bitwise.
double canonical6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::strtod(buf, nullptr);
}

}  // namespace

EpochSeries train_model(Model& model, const FragmentScene& scene, const TrainConfig& cfg) {
    cfg.validate();
    const VarPtr input = constant(scene.fragments);
    const Tensor& target = scene.target;
    Adam opt(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);

    EpochSeries series;
    VarPtr pred = model.forward(input);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double last_loss = 0;
        bool finite = true;
        for (int s = 0; s < cfg.steps_per_epoch; ++s) {
            VarPtr loss = bce_loss(pred, target);
            last_loss = loss->value.item();
            if (!std::isfinite(last_loss)) {
                finite = false;
                break;
            }
            opt.zero_grad();
            backward(loss);
            opt.step();
            pred = model.forward(input);  // post-step map; doubles as the next step's input
        }
        if (!finite) {
            series.diverged_at = epoch;
            break;
        }
        const PixelMetrics m = f1_at_threshold(pred->value, target, cfg.eval_threshold);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = canonical6(last_loss);
        rec.precision = canonical6(m.precision);
        rec.recall = canonical6(m.recall);
        rec.f1 = canonical6(m.f1);
        series.epochs.push_back(rec);
        if (std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), epoch) !=
            cfg.snapshot_epochs.end()) {
            series.snapshots.emplace_back(epoch, pred->value);
        }
    }
    return series;
}

EpochSeries train_one_trial(const ModelConfig& model_cfg, const FragmentScene& scene,
                            const TrainConfig& cfg) {
    cfg.validate();
    ModelConfig mc = model_cfg;
    mc.in_channels = scene.fragment_count();
    mc.image_size = scene.config.image_size;
    Model model = build_model(mc);
    init_weights(model, cfg.seed);
    return train_model(model, scene, cfg);
}

}  // namespace flearn
