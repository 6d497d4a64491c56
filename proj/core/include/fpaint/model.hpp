#pragma once

#include <memory>
#include <optional>
#include <string>

#include "fpaint/backbone.hpp"
#include "fpaint/checkpoint.hpp"
#include "fpaint/config.hpp"
#include "fpaint/control.hpp"
#include "fpaint/diffusion.hpp"

namespace fpaint {

struct ModelConfig {
    BackboneConfig backbone;
    SignalKind signal = SignalKind::sketch;
    int diffusion_steps = 1000;

    static ModelConfig from_config(const Config& cfg, SignalKind signal) {
        ModelConfig mc;
        mc.signal = signal;
        mc.diffusion_steps = cfg.get_int("model.diffusion_steps");
        mc.backbone.base_channels = cfg.get_int("model.base_channels");
        mc.backbone.channel_mult = cfg.get_int_list("model.channel_mult");
        mc.backbone.attention_levels = cfg.get_int_list("model.attention_levels");
        mc.backbone.head_count = cfg.get_int("model.head_count");
        mc.backbone.patch_factor = cfg.get_int("model.patch_factor");
        mc.backbone.embed_dim = cfg.get_int("model.embed_dim");
        mc.backbone.noise_emb_dim = cfg.get_int("model.noise_emb_dim");
        const std::string mode = cfg.get("model.attention_mode");
        if (mode == "temporal") mc.backbone.attention_mode = AttentionMode::temporal;
        else if (mode == "crossframe") mc.backbone.attention_mode = AttentionMode::crossframe;
        else if (mode == "matching") mc.backbone.attention_mode = AttentionMode::matching;
        else throw std::runtime_error("config: bad model.attention_mode '" + mode + "'");
        return mc;
    }
};

// Complete trainable model: two-frame denoiser, source-image embedder and
// (for raster signals) the sparse control encoder. Each component draws its
// initialization from an independent seed stream, so adding or removing the
// control encoder never shifts the backbone init.
template <typename T>
class EditModel {
public:
    EditModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), schedule_(cfg.diffusion_steps) {
        cfg_.backbone.validate();
        Rng master(seed);
        Rng rng_backbone = master.split(1);
        Rng rng_embedder = master.split(2);
        Rng rng_control = master.split(3);

        denoiser_ = std::make_unique<Denoiser<T>>(cfg_.backbone, store_, rng_backbone);
        embedder_ = ImageEmbedder<T>(store_, cfg_.backbone.image_h, cfg_.backbone.image_w,
                                     cfg_.backbone.embed_dim, rng_embedder);
        const int cs = signal_raster_channels(cfg_.signal);
        if (cs > 0) {
            std::vector<ControlLevelSpec> levels;
            for (int l = 0; l < cfg_.backbone.levels(); ++l) {
                levels.push_back(ControlLevelSpec{cfg_.backbone.channels_at(l), cfg_.backbone.level_h(l),
                                                  cfg_.backbone.level_w(l), cfg_.backbone.has_attention(l)});
            }
            control_ = std::make_unique<ControlEncoder<T>>(cs, cfg_.backbone.image_h, cfg_.backbone.image_w,
                                                           cfg_.backbone.patch_factor, levels, store_,
                                                           rng_control);
        }
    }

    const ModelConfig& config() const { return cfg_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }
    ControlEncoder<T>* control() { return control_.get(); }
    const ControlEncoder<T>* control() const { return control_.get(); }

    Tensor<T> embed_source(const Tensor<T>& image) const { return embedder_.forward(image); }

    // control scales by level, for injection
    std::map<int, Tensor<T>> control_scales() const {
        std::map<int, Tensor<T>> out;
        if (!control_) return out;
        for (int l = 0; l < cfg_.backbone.levels(); ++l) {
            if (cfg_.backbone.has_attention(l)) out[l] = control_->level_scale(l);
        }
        return out;
    }

    DenoiseOutput<T> denoise(const Tensor<T>& noisy_src, const Tensor<T>& noisy_tgt, double t,
                             const Tensor<T>& source_latent, const Tensor<T>& emb_tokens,
                             const ControlFeatures<T>* ctrl, const DragPointSet* drags) const {
        std::map<int, Tensor<T>> scales = control_scales();
        return denoiser_->forward(noisy_src, noisy_tgt, t, source_latent, emb_tokens, ctrl,
                                  ctrl ? &scales : nullptr, drags);
    }

private:
    ModelConfig cfg_;
    NoiseSchedule schedule_;
    ParamStore<T> store_;
    std::unique_ptr<Denoiser<T>> denoiser_;
    ImageEmbedder<T> embedder_;
    std::unique_ptr<ControlEncoder<T>> control_;
};

// ---------------------------------------------------------------------------
// checkpoint glue: model config rides along as meta.* scalar records inside
// the regular named-tensor format
// ---------------------------------------------------------------------------

inline std::vector<NamedTensor> model_meta_tensors(const ModelConfig& cfg) {
    auto scalar = [](const std::string& name, float v) {
        return NamedTensor{name, {1}, {v}};
    };
    std::vector<NamedTensor> out;
    out.push_back(scalar("meta.image_h", static_cast<float>(cfg.backbone.image_h)));
    out.push_back(scalar("meta.image_w", static_cast<float>(cfg.backbone.image_w)));
    out.push_back(scalar("meta.patch_factor", static_cast<float>(cfg.backbone.patch_factor)));
    out.push_back(scalar("meta.base_channels", static_cast<float>(cfg.backbone.base_channels)));
    out.push_back(scalar("meta.head_count", static_cast<float>(cfg.backbone.head_count)));
    out.push_back(scalar("meta.embed_dim", static_cast<float>(cfg.backbone.embed_dim)));
    out.push_back(scalar("meta.noise_emb_dim", static_cast<float>(cfg.backbone.noise_emb_dim)));
    out.push_back(scalar("meta.attention_mode", static_cast<float>(static_cast<int>(cfg.backbone.attention_mode))));
    out.push_back(scalar("meta.signal", static_cast<float>(static_cast<int>(cfg.signal))));
    out.push_back(scalar("meta.diffusion_steps", static_cast<float>(cfg.diffusion_steps)));
    NamedTensor mult{"meta.channel_mult", {static_cast<int>(cfg.backbone.channel_mult.size())}, {}};
    for (int m : cfg.backbone.channel_mult) mult.data.push_back(static_cast<float>(m));
    out.push_back(std::move(mult));
    NamedTensor attn{"meta.attention_levels", {static_cast<int>(cfg.backbone.attention_levels.size())}, {}};
    for (int a : cfg.backbone.attention_levels) attn.data.push_back(static_cast<float>(a));
    out.push_back(std::move(attn));
    return out;
}

inline ModelConfig model_config_from_meta(const std::vector<NamedTensor>& tensors) {
    std::map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) {
        if (t.name.rfind("meta.", 0) == 0) by_name[t.name] = &t;
    }
    auto scalar = [&](const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error("checkpoint: missing " + name);
        return static_cast<int>(it->second->data.at(0));
    };
    ModelConfig cfg;
    cfg.backbone.image_h = scalar("meta.image_h");
    cfg.backbone.image_w = scalar("meta.image_w");
    cfg.backbone.patch_factor = scalar("meta.patch_factor");
    cfg.backbone.base_channels = scalar("meta.base_channels");
    cfg.backbone.head_count = scalar("meta.head_count");
    cfg.backbone.embed_dim = scalar("meta.embed_dim");
    cfg.backbone.noise_emb_dim = scalar("meta.noise_emb_dim");
    cfg.backbone.attention_mode = static_cast<AttentionMode>(scalar("meta.attention_mode"));
    cfg.signal = static_cast<SignalKind>(scalar("meta.signal"));
    cfg.diffusion_steps = scalar("meta.diffusion_steps");
    cfg.backbone.channel_mult.clear();
    for (float v : by_name.at("meta.channel_mult")->data) {
        cfg.backbone.channel_mult.push_back(static_cast<int>(v));
    }
    cfg.backbone.attention_levels.clear();
    for (float v : by_name.at("meta.attention_levels")->data) {
        cfg.backbone.attention_levels.push_back(static_cast<int>(v));
    }
    return cfg;
}

inline void save_model(const std::string& path, const EditModel<float>& model) {
    std::vector<NamedTensor> tensors = model_meta_tensors(model.config());
    std::vector<NamedTensor> params = snapshot_params(model.params());
    tensors.insert(tensors.end(), params.begin(), params.end());
    save_checkpoint(path, tensors);
}

inline std::unique_ptr<EditModel<float>> load_model(const std::string& path) {
    std::vector<NamedTensor> tensors = load_checkpoint(path);
    ModelConfig cfg = model_config_from_meta(tensors);
    auto model = std::make_unique<EditModel<float>>(cfg, /*seed=*/0);
    restore_params(model->params(), tensors);
    return model;
}

}  // namespace fpaint
