#pragma once

#include <cstdint>
#include <vector>

#include "flearn/models.hpp"
#include "flearn/scene.hpp"

namespace flearn {

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double eval_threshold = 0.5;
    std::uint64_t seed = 42;
    int steps_per_epoch = 1;          // the scene is the whole dataset
    std::vector<int> snapshot_epochs; // 1-based epochs whose predictions to keep

    void validate(bool) const;  // argument: whether snapshot epochs are allowed
    void validate() const { validate(true); }
};

/// Mean binary cross entropy: -[t ln p + (1-t) ln(1-p)] averaged over pixels.
/// Each log term is floored at -100 and the backward denominator p(1-p) is
/// floored at 1e-12, so saturated pixels keep a finite loss and a restoring
/// gradient instead of going silent.
VarPtr bce_loss(const VarPtr& pred, const Tensor& target);

/// Adam with bias correction. step() consumes the gradients accumulated on
/// the parameters; lr = 0 leaves parameters bitwise unchanged.
class Adam {
  public:
    Adam(std::vector<VarPtr> params, double lr, double beta1, double beta2, double eps);

    void step();
    void zero_grad();
    int steps_taken() const { return t_; }

  private:
    std::vector<VarPtr> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
};

/// Deterministic weight init in parameter order: *.weight gets fan-in-scaled
/// uniform U(-1/sqrt(fan_in), +1/sqrt(fan_in)) where fan_in = Cin*kh*kw,
/// *.bias and *.beta get zeros, *.gamma gets ones. Only weights consume
/// generator draws, so the stream is insensitive to the zero-filled groups.
void init_weights(Model& model, std::uint64_t seed);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double loss = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct EpochSeries {
    std::vector<EpochRecord> epochs;
    std::vector<std::pair<int, Tensor>> snapshots;  // (epoch, prediction map)
    int diverged_at = 0;                            // 1-based epoch, 0 = finished

    bool diverged() const { return diverged_at != 0; }
};

/// Trains an already-built, already-initialized model in place. Per epoch:
/// forward -> bce -> backward -> adam step, then evaluate the post-step
/// prediction at the threshold. The recorded loss is the last one
/// backpropagated in that epoch. A non-finite loss aborts the trial and
/// records the offending epoch. Metric values are canonicalized to 6 decimal
/// places (the CSV precision), which makes aggregates exactly recomputable
/// from exported files.
EpochSeries train_model(Model& model, const FragmentScene& scene, const TrainConfig& cfg);

/// One full trial: build the model for the scene (in_channels and image_size
/// taken from the scene), init_weights from cfg.seed, then train_model.
EpochSeries train_one_trial(const ModelConfig& model_cfg, const FragmentScene& scene,
                            const TrainConfig& cfg);

}  // namespace flearn
