#include "flearn/models.hpp"

#include <sstream>
#include <stdexcept>

#include "flearn/spectral.hpp"

namespace flearn {

namespace {

const std::vector<std::pair<ModelKind, const char*>> kKindNames = {
    {ModelKind::BConv, "bconv"},           {ModelKind::FLearn, "flearn"},
    {ModelKind::ConvCasV1, "conv-casv1"},  {ModelKind::ConvCasV2, "conv-casv2"},
    {ModelKind::ConvParV1, "conv-parv1"},  {ModelKind::ConvParV2, "conv-parv2"},
};

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string to_string(ModelKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    std::string valid;
    for (const auto& [k, n] : kKindNames) {
        if (name == n) return k;
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw std::invalid_argument("unknown model kind '" + name + "' (valid: " + valid + ")");
}

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds = [] {
        std::vector<ModelKind> v;
        for (const auto& [k, n] : kKindNames) v.push_back(k);
        return v;
    }();
    return kinds;
}

void ModelConfig::validate() const {
    if (in_channels < 1) throw std::invalid_argument("model: in_channels must be >= 1");
    if (hidden_channels < 1) throw std::invalid_argument("model: hidden_channels must be >= 1");
    if (!is_pow2(image_size)) {
        throw std::invalid_argument("model: image_size must be a power of two, got " +
                                    std::to_string(image_size));
    }
}

namespace {

// Builder-local bookkeeping: creates named parameters in a fixed order and
// collects printable layer lines.
struct Builder {
    std::vector<VarPtr> params;
    std::vector<std::string> layers;

    VarPtr make(const std::string& name, std::vector<int> shape) {
        auto p = parameter(name, Tensor(std::move(shape)));
        params.push_back(p);
        return p;
    }
};

struct ConvLayer {
    VarPtr w, b;
    int pad = 0;
};

ConvLayer make_conv(Builder& bld, const std::string& name, int cin, int cout, int k) {
    ConvLayer c;
    c.w = bld.make(name + ".weight", {cout, cin, k, k});
    c.b = bld.make(name + ".bias", {cout});
    c.pad = (k - 1) / 2;
    return c;
}

VarPtr apply_conv(const ConvLayer& c, const VarPtr& x) { return conv2d(x, c.w, c.b, c.pad); }

// The repeated building block: 1x1 conv -> [relu] -> 3x3 conv -> [relu]
// -> 1x1 conv -> [relu].
struct ConvStack {
    ConvLayer c1, c2, c3;
    bool act = true;

    VarPtr apply(const VarPtr& x) const {
        VarPtr h = apply_conv(c1, x);
        if (act) h = relu(h);
        h = apply_conv(c2, h);
        if (act) h = relu(h);
        h = apply_conv(c3, h);
        if (act) h = relu(h);
        return h;
    }
};

ConvStack make_stack(Builder& bld, const std::string& prefix, int cin, int hidden, bool act) {
    const std::string p = prefix.empty() ? "" : prefix + ".";
    ConvStack s;
    s.c1 = make_conv(bld, p + "conv1", cin, hidden, 1);
    s.c2 = make_conv(bld, p + "conv2", hidden, hidden, 3);
    s.c3 = make_conv(bld, p + "conv3", hidden, hidden, 1);
    s.act = act;
    const char* suffix = act ? " + relu" : "";
    bld.layers.push_back(p + "conv1: 1x1 " + std::to_string(cin) + "->" + std::to_string(hidden) +
                         suffix);
    bld.layers.push_back(p + "conv2: 3x3 " + std::to_string(hidden) + "->" +
                         std::to_string(hidden) + suffix);
    bld.layers.push_back(p + "conv3: 1x1 " + std::to_string(hidden) + "->" +
                         std::to_string(hidden) + suffix);
    return s;
}

ConvLayer make_extra3x3(Builder& bld, const std::string& name, int cin, int hidden, bool act) {
    ConvLayer c = make_conv(bld, name, cin, hidden, 3);
    bld.layers.push_back(name + ": 3x3 " + std::to_string(cin) + "->" + std::to_string(hidden) +
                         (act ? " + relu" : ""));
    return c;
}

ConvLayer make_classifier(Builder& bld, int hidden) {
    ConvLayer c = make_conv(bld, "classifier", hidden, 1, 1);
    bld.layers.push_back("classifier: 1x1 " + std::to_string(hidden) + "->1 + sigmoid");
    return c;
}

VarPtr check_input(const VarPtr& x, const ModelConfig& cfg) {
    if (!x) throw std::invalid_argument("model forward: null input");
    const std::vector<int> want = {cfg.in_channels, cfg.image_size, cfg.image_size};
    if (x->value.shape() != want) {
        throw std::invalid_argument("model forward: expected input " + shape_to_string(want) +
                                    ", got " + shape_to_string(x->value.shape()));
    }
    return x;
}

}  // namespace

Model build_model(const ModelConfig& cfg) {
    cfg.validate();
    Builder bld;
    const int k = cfg.in_channels;
    const int h = cfg.hidden_channels;
    const bool act = cfg.use_activation;
    Model model;
    model.config = cfg;

    switch (cfg.kind) {
        case ModelKind::BConv: {
            auto stack = make_stack(bld, "", k, h, act);
            auto clf = make_classifier(bld, h);
            model.forward_fn = [cfg, stack, clf](const VarPtr& x) {
                return sigmoid(apply_conv(clf, stack.apply(check_input(x, cfg))));
            };
            break;
        }
        case ModelKind::FLearn: {
            bld.layers.push_back("dft2");
            auto real_stack = make_stack(bld, "real", k, h, act);
            auto imag_stack = make_stack(bld, "imag", k, h, act);
            bld.layers.push_back("idft2 + magnitude");
            auto clf = make_classifier(bld, h);
            model.forward_fn = [cfg, real_stack, imag_stack, clf](const VarPtr& x) {
                auto [fre, fim] = dft2(check_input(x, cfg));
                VarPtr r = real_stack.apply(fre);
                VarPtr i = imag_stack.apply(fim);
                auto [sre, sim] = idft2(r, i);
                return sigmoid(apply_conv(clf, magnitude(sre, sim)));
            };
            break;
        }
        case ModelKind::ConvCasV1: {
            auto sa = make_stack(bld, "stack_a", k, h, act);
            auto sb = make_stack(bld, "stack_b", h, h, act);
            auto clf = make_classifier(bld, h);
            model.forward_fn = [cfg, sa, sb, clf](const VarPtr& x) {
                return sigmoid(apply_conv(clf, sb.apply(sa.apply(check_input(x, cfg)))));
            };
            break;
        }
        case ModelKind::ConvCasV2: {
            auto pre = make_extra3x3(bld, "pre", k, h, act);
            auto sa = make_stack(bld, "stack_a", h, h, act);
            auto sb = make_stack(bld, "stack_b", h, h, act);
            auto post = make_extra3x3(bld, "post", h, h, act);
            auto clf = make_classifier(bld, h);
            model.forward_fn = [cfg, pre, sa, sb, post, clf, act](const VarPtr& x) {
                VarPtr v = apply_conv(pre, check_input(x, cfg));
                if (act) v = relu(v);
                v = sb.apply(sa.apply(v));
                v = apply_conv(post, v);
                if (act) v = relu(v);
                return sigmoid(apply_conv(clf, v));
            };
            break;
        }
        case ModelKind::ConvParV1: {
            auto sa = make_stack(bld, "stack_a", k, h, act);
            auto sb = make_stack(bld, "stack_b", k, h, act);
            ConvLayer merge;
            if (cfg.par_merge == ParMerge::Concat) {
                merge = make_conv(bld, "merge", 2 * h, h, 1);
                bld.layers.push_back("merge: concat + 1x1 " + std::to_string(2 * h) + "->" +
                                     std::to_string(h));
            } else {
                bld.layers.push_back("merge: elementwise sum");
            }
            auto clf = make_classifier(bld, h);
            const ParMerge pm = cfg.par_merge;
            model.forward_fn = [cfg, sa, sb, merge, clf, pm](const VarPtr& x) {
                check_input(x, cfg);
                VarPtr a = sa.apply(x);
                VarPtr b = sb.apply(x);
                VarPtr m = pm == ParMerge::Sum ? add(a, b)
                                               : apply_conv(merge, concat_channels(a, b));
                return sigmoid(apply_conv(clf, m));
            };
            break;
        }
        case ModelKind::ConvParV2: {
            auto pre = make_extra3x3(bld, "pre", k, h, act);
            auto sa = make_stack(bld, "stack_a", h, h, act);
            auto sb = make_stack(bld, "stack_b", h, h, act);
            ConvLayer merge;
            if (cfg.par_merge == ParMerge::Concat) {
                merge = make_conv(bld, "merge", 2 * h, h, 1);
                bld.layers.push_back("merge: concat + 1x1 " + std::to_string(2 * h) + "->" +
                                     std::to_string(h));
            } else {
                bld.layers.push_back("merge: elementwise sum");
            }
            auto post = make_extra3x3(bld, "post", h, h, act);
            auto clf = make_classifier(bld, h);
            const ParMerge pm = cfg.par_merge;
            model.forward_fn = [cfg, pre, sa, sb, merge, post, clf, pm, act](const VarPtr& x) {
                VarPtr v = apply_conv(pre, check_input(x, cfg));
                if (act) v = relu(v);
                VarPtr a = sa.apply(v);
                VarPtr b = sb.apply(v);
                VarPtr m = pm == ParMerge::Sum ? add(a, b)
                                               : apply_conv(merge, concat_channels(a, b));
                m = apply_conv(post, m);
                if (act) m = relu(m);
                return sigmoid(apply_conv(clf, m));
            };
            break;
        }
    }

    model.params = std::move(bld.params);
    model.layers = std::move(bld.layers);
    return model;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const VarPtr& p : params) n += p->value.size();
    return n;
}

VarPtr Model::param(const std::string& name) const {
    for (const VarPtr& p : params) {
        if (p->name == name) return p;
    }
    return nullptr;
}

std::string Model::summary() const {
    std::ostringstream out;
    out << "kind: " << to_string(config.kind) << "\n";
    out << "input: [" << config.in_channels << "," << config.image_size << ","
        << config.image_size << "]\n";
    out << "layers:\n";
    for (const std::string& l : layers) out << "  " << l << "\n";
    out << "parameters: " << parameter_count() << "\n";
    return out.str();
}

FLearnLayer::Cbr FLearnLayer::make_cbr(const std::string& name, int cin, int cout, int k) {
    Cbr cbr;
    cbr.w = parameter(name + ".conv.weight", Tensor({cout, cin, k, k}));
    cbr.b = parameter(name + ".conv.bias", Tensor({cout}));
    cbr.gamma = parameter(name + ".bn.gamma", Tensor::full({cout}, 1.0));
    cbr.beta = parameter(name + ".bn.beta", Tensor({cout}));
    cbr.bn = std::make_shared<BatchNormState>(cout);
    cbr.pad = (k - 1) / 2;
    params_.push_back(cbr.w);
    params_.push_back(cbr.b);
    params_.push_back(cbr.gamma);
    params_.push_back(cbr.beta);
    return cbr;
}

VarPtr FLearnLayer::apply_cbr(Cbr& cbr, const VarPtr& x, BnMode mode) {
    return relu(batch_norm(conv2d(x, cbr.w, cbr.b, cbr.pad), cbr.gamma, cbr.beta, *cbr.bn, mode));
}

FLearnLayer::FLearnLayer(std::string name, int channels) : channels_(channels) {
    if (channels < 1) throw std::invalid_argument("flearn_layer: channels must be >= 1");
    const int sides[3] = {1, 3, 1};
    for (int i = 0; i < 3; ++i) {
        real_.push_back(make_cbr(name + ".real.cbr" + std::to_string(i + 1), channels, channels,
                                 sides[i]));
    }
    for (int i = 0; i < 3; ++i) {
        imag_.push_back(make_cbr(name + ".imag.cbr" + std::to_string(i + 1), channels, channels,
                                 sides[i]));
    }
}

VarPtr FLearnLayer::apply(const VarPtr& f, BnMode mode) {
    if (!f || f->value.rank() != 3 || f->value.dim(0) != channels_) {
        throw std::invalid_argument("flearn_layer: input must be [" + std::to_string(channels_) +
                                    ",H,W]");
    }
    auto [fre, fim] = dft2(f);
    VarPtr r = fre;
    for (Cbr& cbr : real_) r = apply_cbr(cbr, r, mode);
    VarPtr i = fim;
    for (Cbr& cbr : imag_) i = apply_cbr(cbr, i, mode);
    auto [sre, sim] = idft2(r, i);
    return magnitude(sre, sim);
}

FusionHead::FusionHead(std::string name, int channels) : channels_(channels) {
    if (channels < 1) throw std::invalid_argument("fuse: channels must be >= 1");
    w_ = parameter(name + ".conv.weight", Tensor({channels, 2 * channels, 1, 1}));
    b_ = parameter(name + ".conv.bias", Tensor({channels}));
    gamma_ = parameter(name + ".bn.gamma", Tensor::full({channels}, 1.0));
    beta_ = parameter(name + ".bn.beta", Tensor({channels}));
    bn_ = std::make_shared<BatchNormState>(channels);
    params_ = {w_, b_, gamma_, beta_};
}

VarPtr FusionHead::apply(const VarPtr& f, const VarPtr& f_hat, BnMode mode) {
    if (!f || !f_hat || !f->value.same_shape(f_hat->value) || f->value.rank() != 3 ||
        f->value.dim(0) != channels_) {
        throw std::invalid_argument("fuse: inputs must both be [" + std::to_string(channels_) +
                                    ",H,W]");
    }
    return relu(batch_norm(conv2d(concat_channels(f, f_hat), w_, b_, 0), gamma_, beta_, *bn_,
                           mode));
}

}  // namespace flearn
