#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caudg/autodiff.hpp"
#include "caudg/ids.hpp"
#include "caudg/optim.hpp"

namespace caudg {

/// Layer plan of the two-branch network. Presets pin the conv/pool sizes;
/// dataset-dependent dims (channels, width, classes, domains) are filled from
/// the data at hand.
struct ArchConfig {
    std::string preset = "synthetic";
    std::size_t in_channels = 3;
    std::size_t width = 32;
    std::size_t num_classes = 4;
    std::size_t num_domains = 4;

    std::size_t base_filters = 8;
    std::size_t base_kernel = 5;
    std::size_t base_stride = 1;
    std::size_t base_pool = 2;

    std::size_t branch_filters = 8;
    std::size_t branch_kernel = 5;
    std::size_t branch_stride = 1;
    std::size_t branch_pool = 2;

    std::size_t cdpl_hidden = 32;
    bool cdpl_shared = false;
    bool cdpl_stopgrad = false;
    bool early_fork = true;

    std::size_t base_width() const;    // width of f_b output
    std::size_t branch_width() const;  // width of branch conv output
    std::size_t feature_dim() const;   // flattened branch features
    void validate() const;             // throws naming the failing stage
};

/// Presets: "dsads", "uschad", "pamap2", "ucihar", "synthetic". The uschad
/// plan emits a base map of 32 channels and width 58 on 200-wide windows.
ArchConfig arch_preset(const std::string& name);

/// Every forward product of one training batch. Augmented-view logits are
/// carried so the classification loss can be assembled from this struct alone.
struct BranchOutputs {
    Var base;      // f_b(x)
    Var base_aug;  // IDS(f_b(x))
    Var fc_x, fd_x;
    Var fc_a, fd_a;
    Var cdpl_c_x, cdpl_c_a, cdpl_d_x, cdpl_d_a;
    Var act_logits, dom_logits;
    Var act_logits_aug, dom_logits_aug;
};

/// Switches the ablations need at forward time.
struct ForwardOptions {
    bool with_noncausal = true;
    bool with_cdpl = true;
};

enum class CdplBranch { kCausal, kNonCausal };

/// Early-forking two-branch network: shared base extractor, disjoint causal
/// and non-causal conv branches, linear activity/domain heads, and a
/// two-layer projection head (FC-BN-ReLU-FC) per branch for the consistency
/// loss. Inference uses only base -> causal branch -> activity head.
class Model {
public:
    Model(const ArchConfig& config, std::uint64_t seed);

    const ArchConfig& config() const { return config_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    /// BN running statistics, keyed like parameters.
    std::vector<std::pair<std::string, Tensor>>& buffers() { return buffers_; }
    const std::vector<std::pair<std::string, Tensor>>& buffers() const { return buffers_; }

    Parameter* find_parameter(const std::string& id);
    Tensor* find_buffer(const std::string& id);

    BranchOutputs forward_train(const Tensor& x, const IdsFn& ids_fn,
                                const ForwardOptions& opts = {});

    /// Activity logits through the causal path only (eval-mode everywhere).
    Tensor forward_infer(const Tensor& x);

    /// Causal-branch features f_c(f_b(x)) flattened to [B, D_feat], eval mode.
    Tensor causal_features(const Tensor& x);

    /// Projection head on [B, D_feat] features.
    Var cdpl(const Var& feature, CdplBranch branch, bool train);

    /// Ids of the parameters the inference path touches.
    std::vector<std::string> inference_parameter_ids() const;

private:
    struct ConvParams {
        Var w, b;
    };
    struct CdplParams {
        Var w1, b1, gamma, beta, w2, b2;
        Tensor* running_mean = nullptr;
        Tensor* running_var = nullptr;
        std::string prefix;
    };

    Var base_forward(const Var& x);
    Var branch_forward(const Var& base, const ConvParams& conv);

    Var register_param(const std::string& id, Tensor init);
    Tensor* register_buffer(const std::string& id, Tensor init);
    ConvParams init_conv(const std::string& prefix, std::size_t filters, std::size_t in_ch,
                         std::size_t kernel, std::mt19937_64& rng);
    CdplParams init_cdpl(const std::string& prefix, std::mt19937_64& rng);

    ArchConfig config_;
    std::vector<Parameter> params_;
    std::vector<std::pair<std::string, Tensor>> buffers_;

    ConvParams base_conv_;
    ConvParams causal_conv_;
    ConvParams noncausal_conv_;  // aliases causal_conv_ when early_fork is off
    Var act_w_, act_b_;
    Var dom_w_, dom_b_;
    CdplParams cdpl_c_;
    CdplParams cdpl_d_;  // aliases cdpl_c_ when cdpl_shared
};

}  // namespace caudg
