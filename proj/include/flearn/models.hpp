#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flearn/ops.hpp"

namespace flearn {

enum class ModelKind { BConv, FLearn, ConvCasV1, ConvCasV2, ConvParV1, ConvParV2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);  // throws listing valid names
const std::vector<ModelKind>& all_model_kinds();

/// Merge rule for the parallel variants; Sum is the default, Concat routes
/// through an extra 1x1 convolution back to hidden_channels.
enum class ParMerge { Sum, Concat };

struct ModelConfig {
    ModelKind kind = ModelKind::BConv;
    int in_channels = 4;        // fragment count K
    int hidden_channels = 64;
    int image_size = 128;       // M == N, power of two
    // The reference setup runs the recovery benchmark with bare conv stacks;
    // relu between the intermediate convs is available for sensitivity runs.
    bool use_activation = false;
    bool use_norm = false;      // reserved for CBR-style stacks; toy models run without it
    ParMerge par_merge = ParMerge::Sum;

    void validate() const;
};

/// A built network: ordered parameter leaves plus a forward closure. The
/// parameter order is the construction order and defines both the
/// weight-initialization draw order and the checkpoint layout.
struct Model {
    ModelConfig config;
    std::vector<VarPtr> params;
    std::function<VarPtr(const VarPtr&)> forward_fn;
    std::vector<std::string> layers;  // printable layer descriptions

    VarPtr forward(const VarPtr& input) const { return forward_fn(input); }
    VarPtr forward(const Tensor& input) const { return forward_fn(constant(input)); }
    std::size_t parameter_count() const;
    VarPtr param(const std::string& name) const;  // nullptr if absent
    std::string summary() const;
};

Model build_model(const ModelConfig& cfg);

/// The practical F-Learn layer: dft2 -> CBRG over the real and imaginary
/// planes (CBR 1x1 -> CBR 3x3 -> CBR 1x1, each conv + batch norm + relu)
/// -> idft2 -> magnitude. Channel count is preserved.
class FLearnLayer {
  public:
    FLearnLayer(std::string name, int channels);

    VarPtr apply(const VarPtr& f, BnMode mode);
    const std::vector<VarPtr>& params() const { return params_; }

  private:
    struct Cbr {
        VarPtr w, b, gamma, beta;
        std::shared_ptr<BatchNormState> bn;
        int pad = 0;
    };
    Cbr make_cbr(const std::string& name, int cin, int cout, int k);
    VarPtr apply_cbr(Cbr& cbr, const VarPtr& x, BnMode mode);

    int channels_;
    std::vector<Cbr> real_, imag_;
    std::vector<VarPtr> params_;
};

/// The fusion head: concat(f, f_hat) -> 1x1 conv (2C -> C) -> batch norm
/// -> relu.
class FusionHead {
  public:
    FusionHead(std::string name, int channels);

    VarPtr apply(const VarPtr& f, const VarPtr& f_hat, BnMode mode);
    const std::vector<VarPtr>& params() const { return params_; }

  private:
    int channels_;
    VarPtr w_, b_, gamma_, beta_;
    std::shared_ptr<BatchNormState> bn_;
    std::vector<VarPtr> params_;
};

}  // namespace flearn
