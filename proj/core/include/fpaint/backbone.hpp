#pragma once

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "fpaint/attention.hpp"
#include "fpaint/control.hpp"
#include "fpaint/ops.hpp"
#include "fpaint/params.hpp"

namespace fpaint {

// ---------------------------------------------------------------------------
// latent stand-in: lossless space-to-depth
// ---------------------------------------------------------------------------

// [C,H,W] -> [C*f*f, H/f, W/f]; channel order c*f*f + dy*f + dx
template <typename T>
Tensor<T> patchify(const Tensor<T>& img, int f) {
    if (img.ndim() != 3) throw std::invalid_argument("patchify: need [C,H,W]");
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (f < 1 || h % f != 0 || w % f != 0) {
        throw std::invalid_argument("patchify: dims " + shape_str(img.shape) +
                                    " not divisible by factor " + std::to_string(f));
    }
    const int oh = h / f, ow = w / f;
    Tensor<T> out = Tensor<T>::zeros({c * f * f, oh, ow});
    for (int ci = 0; ci < c; ++ci)
        for (int dy = 0; dy < f; ++dy)
            for (int dx = 0; dx < f; ++dx) {
                const int co = (ci * f + dy) * f + dx;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        (*out.data)[(static_cast<std::size_t>(co) * oh + y) * ow + x] =
                            (*img.data)[(static_cast<std::size_t>(ci) * h + y * f + dy) * w + x * f + dx];
            }
    return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& lat, int f) {
    if (lat.ndim() != 3) throw std::invalid_argument("unpatchify: need [C,h,w]");
    const int cf = lat.dim(0), oh = lat.dim(1), ow = lat.dim(2);
    if (f < 1 || cf % (f * f) != 0) {
        throw std::invalid_argument("unpatchify: channels not divisible by factor^2");
    }
    const int c = cf / (f * f);
    const int h = oh * f, w = ow * f;
    Tensor<T> out = Tensor<T>::zeros({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int dy = 0; dy < f; ++dy)
            for (int dx = 0; dx < f; ++dx) {
                const int co = (ci * f + dy) * f + dx;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        (*out.data)[(static_cast<std::size_t>(ci) * h + y * f + dy) * w + x * f + dx] =
                            (*lat.data)[(static_cast<std::size_t>(co) * oh + y) * ow + x];
            }
    return out;
}

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

struct BackboneConfig {
    int image_h = 64;
    int image_w = 64;
    int patch_factor = 4;
    int base_channels = 32;
    std::vector<int> channel_mult = {1, 2, 4};
    std::vector<int> attention_levels = {1, 2};
    int head_count = 4;
    AttentionMode attention_mode = AttentionMode::matching;
    int embed_dim = 64;
    int noise_emb_dim = 64;

    int levels() const { return static_cast<int>(channel_mult.size()); }
    int latent_channels() const { return 3 * patch_factor * patch_factor; }
    int latent_h() const { return image_h / patch_factor; }
    int latent_w() const { return image_w / patch_factor; }
    int channels_at(int level) const { return base_channels * channel_mult.at(level); }
    int level_h(int level) const { return latent_h() >> level; }
    int level_w(int level) const { return latent_w() >> level; }
    // pixels per token at this level
    int token_stride(int level) const { return patch_factor << level; }

    bool has_attention(int level) const {
        for (int l : attention_levels)
            if (l == level) return true;
        return false;
    }

    // token strides of every attention site, coarse included once
    std::vector<int> attention_strides() const {
        std::vector<int> out;
        for (int l : attention_levels) out.push_back(token_stride(l));
        return out;
    }

    void validate() const {
        if (image_h % patch_factor != 0 || image_w % patch_factor != 0) {
            throw std::invalid_argument("config: image dims not divisible by patch_factor");
        }
        if (channel_mult.empty()) throw std::invalid_argument("config: empty channel_mult");
        const int down = 1 << (levels() - 1);
        if (latent_h() % down != 0 || latent_w() % down != 0) {
            throw std::invalid_argument("config: latent grid not divisible across levels");
        }
        for (int l : attention_levels) {
            if (l < 0 || l >= levels()) throw std::invalid_argument("config: attention level out of range");
            if (channels_at(l) % head_count != 0) {
                throw std::invalid_argument("config: head_count does not divide attention dim");
            }
        }
        if (image_h % 16 != 0 || image_w % 16 != 0) {
            throw std::invalid_argument("config: image dims must be divisible by 16");
        }
    }
};

// ---------------------------------------------------------------------------
// building blocks
// ---------------------------------------------------------------------------

// layer norm over the channel axis at each spatial position
template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor<T> tok = transpose2d(reshape(x, {c, h * w}));
    Tensor<T> normed = layer_norm_rows(tok, gamma, beta);
    return reshape(transpose2d(normed), {c, h, w});
}

template <typename T>
Tensor<T> sinusoidal_embedding(double t, int dim) {
    Tensor<T> out = Tensor<T>::zeros({1, dim});
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     std::max(1, half - 1));
        (*out.data)[i] = static_cast<T>(std::sin(t * freq));
        (*out.data)[half + i] = static_cast<T>(std::cos(t * freq));
    }
    return out;
}

template <typename T>
struct ResBlock {
    int cin = 0, cout = 0;
    Tensor<T> n1_g, n1_b, conv1_w, conv1_b;
    Tensor<T> emb_w, emb_b;
    Tensor<T> n2_g, n2_b, conv2_w, conv2_b;
    Tensor<T> skip_w, skip_b;  // 1x1, only when cin != cout

    ResBlock() = default;

    ResBlock(ParamStore<T>& store, const std::string& prefix, int cin_, int cout_, int emb_dim,
             Rng& rng)
        : cin(cin_), cout(cout_) {
        n1_g = store.add(prefix + ".n1.g", Tensor<T>::full({cin}, T(1)));
        n1_b = store.add(prefix + ".n1.b", Tensor<T>::zeros({cin}));
        conv1_w = store.add(prefix + ".conv1.w",
                            Tensor<T>::randn(rng, {cout, cin, 3, 3}, std::sqrt(2.0 / (cin * 9))));
        conv1_b = store.add(prefix + ".conv1.b", Tensor<T>::zeros({cout}));
        emb_w = store.add(prefix + ".emb.w",
                          Tensor<T>::randn(rng, {emb_dim, cout}, 1.0 / std::sqrt(emb_dim)));
        emb_b = store.add(prefix + ".emb.b", Tensor<T>::zeros({cout}));
        n2_g = store.add(prefix + ".n2.g", Tensor<T>::full({cout}, T(1)));
        n2_b = store.add(prefix + ".n2.b", Tensor<T>::zeros({cout}));
        // residual branch ends at zero so a fresh block is the identity
        conv2_w = store.add(prefix + ".conv2.w", Tensor<T>::zeros({cout, cout, 3, 3}));
        conv2_b = store.add(prefix + ".conv2.b", Tensor<T>::zeros({cout}));
        if (cin != cout) {
            skip_w = store.add(prefix + ".skip.w",
                               Tensor<T>::randn(rng, {cout, cin, 1, 1}, std::sqrt(1.0 / cin)));
            skip_b = store.add(prefix + ".skip.b", Tensor<T>::zeros({cout}));
        }
    }

    Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& emb_row) const {
        Tensor<T> h = conv2d(silu(channel_norm(x, n1_g, n1_b)), conv1_w, conv1_b, 1, 1);
        Tensor<T> e = reshape(bias_add_rows(matmul(emb_row, emb_w), emb_b), {cout});
        h = bias_add_channels(h, e);
        h = conv2d(silu(channel_norm(h, n2_g, n2_b)), conv2_w, conv2_b, 1, 1);
        Tensor<T> skip = (cin == cout) ? x : conv2d(x, skip_w, skip_b, 1, 0);
        return add(h, skip);
    }
};

// One attention site: spatial self-attention per frame, the configured
// frame-interaction branch, cross-attention against the source-image
// embedding tokens, and optional drag-point injection at the output.
template <typename T>
struct AttnBlock {
    int dim = 0;
    int head_count = 1;
    AttentionMode mode = AttentionMode::matching;
    std::string layer_id;
    Tensor<T> norm_g, norm_b;
    AttentionWeights<T> spatial;
    AttentionWeights<T> branch;
    Tensor<T> xnorm_g, xnorm_b;
    Tensor<T> cross_wq, cross_wk, cross_wv, cross_wo;

    AttnBlock() = default;

    AttnBlock(ParamStore<T>& store, const std::string& prefix, int dim_, int embed_dim,
              int head_count_, AttentionMode mode_, Rng& rng)
        : dim(dim_), head_count(head_count_), mode(mode_), layer_id(prefix) {
        norm_g = store.add(prefix + ".norm.g", Tensor<T>::full({dim}, T(1)));
        norm_b = store.add(prefix + ".norm.b", Tensor<T>::zeros({dim}));
        spatial = make_attention_weights(store, prefix + ".spatial", dim, head_count, rng);
        branch = make_attention_weights(store, prefix + ".branch", dim, head_count, rng);
        // matching and cross-frame branches inherit the spatial weights; the
        // 1-D temporal branch has no spatial counterpart to copy
        if (mode == AttentionMode::matching || mode == AttentionMode::crossframe) {
            copy_attention_weights(branch, spatial);
        }
        xnorm_g = store.add(prefix + ".xnorm.g", Tensor<T>::full({dim}, T(1)));
        xnorm_b = store.add(prefix + ".xnorm.b", Tensor<T>::zeros({dim}));
        const double std = 1.0 / std::sqrt(static_cast<double>(dim));
        cross_wq = store.add(prefix + ".cross.wq", Tensor<T>::randn(rng, {dim, dim}, std));
        cross_wk = store.add(prefix + ".cross.wk",
                             Tensor<T>::randn(rng, {embed_dim, dim}, 1.0 / std::sqrt(embed_dim)));
        cross_wv = store.add(prefix + ".cross.wv",
                             Tensor<T>::randn(rng, {embed_dim, dim}, 1.0 / std::sqrt(embed_dim)));
        cross_wo = store.add(prefix + ".cross.wo", Tensor<T>::zeros({dim, dim}));
    }

    Tensor<T> cross_attend(const Tensor<T>& tokens, const Tensor<T>& emb_tokens) const {
        Tensor<T> q = matmul(layer_norm_rows(tokens, xnorm_g, xnorm_b), cross_wq);
        Tensor<T> k = matmul(emb_tokens, cross_wk);
        Tensor<T> v = matmul(emb_tokens, cross_wv);
        return matmul(attend_projected(q, k, v, head_count).output, cross_wo);
    }

    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& xs, const Tensor<T>& xt,
                                            const Tensor<T>& emb_tokens, const DragPointSet* drags,
                                            std::vector<AttentionRecord<T>>* records) const {
        const int c = xs.dim(0), h = xs.dim(1), w = xs.dim(2);
        Tensor<T> ts = transpose2d(reshape(xs, {c, h * w}));
        Tensor<T> tt = transpose2d(reshape(xt, {c, h * w}));
        TokenGrid<T> ns = TokenGrid<T>::from_tokens(h, w, layer_norm_rows(ts, norm_g, norm_b));
        TokenGrid<T> nt = TokenGrid<T>::from_tokens(h, w, layer_norm_rows(tt, norm_g, norm_b));

        TokenGrid<T> os = spatial_attention(ns, spatial);
        TokenGrid<T> ot = spatial_attention(nt, spatial);

        Tensor<T> hs, ht;
        switch (mode) {
            case AttentionMode::temporal: {
                auto [bs, bt] = temporal_attention(ns, nt, branch);
                hs = add(ts, add(os.tokens, bs.tokens));
                ht = add(tt, add(ot.tokens, bt.tokens));
                break;
            }
            case AttentionMode::crossframe: {
                TokenGrid<T> bt = cross_frame_attention(nt, ns, branch);
                TokenGrid<T> bs = cross_frame_attention(ns, ns, branch);
                hs = add(ts, add(os.tokens, bs.tokens));
                ht = add(tt, add(ot.tokens, bt.tokens));
                break;
            }
            case AttentionMode::matching: {
                auto [bt, rec] = matching_attention(nt, ns, branch, layer_id);
                auto fused = fuse_outputs(os, ot, bt);
                hs = add(ts, fused.first.tokens);
                ht = add(tt, fused.second.tokens);
                if (records) records->push_back(rec);
                break;
            }
        }

        hs = add(hs, cross_attend(hs, emb_tokens));
        ht = add(ht, cross_attend(ht, emb_tokens));

        if (drags && !drags->empty()) {
            auto [gs, gt] = drag_token_inject(TokenGrid<T>::from_tokens(h, w, hs),
                                              TokenGrid<T>::from_tokens(h, w, ht), *drags);
            hs = gs.tokens;
            ht = gt.tokens;
        }

        return {reshape(transpose2d(hs), {c, h, w}), reshape(transpose2d(ht), {c, h, w})};
    }
};

// small trainable conv encoder producing embedding tokens from the source
// image (stand-in for a pretrained image encoder, which is out of budget)
template <typename T>
struct ImageEmbedder {
    int image_h = 0, image_w = 0, embed_dim = 0;
    Tensor<T> c1_w, c1_b, c2_w, c2_b, c3_w, c3_b;

    ImageEmbedder() = default;

    ImageEmbedder(ParamStore<T>& store, int h, int w, int embed, Rng& rng)
        : image_h(h), image_w(w), embed_dim(embed) {
        c1_w = store.add("embedder.c1.w", Tensor<T>::randn(rng, {16, 3, 4, 4}, std::sqrt(2.0 / (3 * 16))));
        c1_b = store.add("embedder.c1.b", Tensor<T>::zeros({16}));
        c2_w = store.add("embedder.c2.w", Tensor<T>::randn(rng, {32, 16, 4, 4}, std::sqrt(2.0 / (16 * 16))));
        c2_b = store.add("embedder.c2.b", Tensor<T>::zeros({32}));
        c3_w = store.add("embedder.c3.w",
                         Tensor<T>::randn(rng, {embed, 32, 4, 4}, std::sqrt(2.0 / (32 * 16))));
        c3_b = store.add("embedder.c3.b", Tensor<T>::zeros({embed}));
    }

    // [3,H,W] -> [(H/16)*(W/16), embed_dim]
    Tensor<T> forward(const Tensor<T>& image) const {
        if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != image_h || image.dim(2) != image_w) {
            throw std::invalid_argument("embed_source: image dims mismatch " + shape_str(image.shape));
        }
        Tensor<T> x = silu(conv2d(image, c1_w, c1_b, 2, 1));
        x = silu(conv2d(x, c2_w, c2_b, 2, 1));
        x = conv2d(x, c3_w, c3_b, 4, 0);
        const int n = x.dim(1) * x.dim(2);
        return transpose2d(reshape(x, {embed_dim, n}));
    }
};

template <typename T>
struct DenoiseOutput {
    Tensor<T> eps_src, eps_tgt;  // [C_lat, h, w]
    std::vector<AttentionRecord<T>> records;
};

// Two-frame U-Net denoiser. Per-frame conv weights are shared between the
// frames; the frames interact only inside the attention blocks (and through
// the target-only control / drag injection).
template <typename T>
class Denoiser {
public:
    Denoiser(const BackboneConfig& cfg, ParamStore<T>& store, Rng& rng) : cfg_(cfg) {
        cfg_.validate();
        const int clat = cfg_.latent_channels();
        const int ne = cfg_.noise_emb_dim;

        emb_w1 = store.add("unet.temb.w1", Tensor<T>::randn(rng, {ne, ne}, 1.0 / std::sqrt(ne)));
        emb_b1 = store.add("unet.temb.b1", Tensor<T>::zeros({ne}));
        emb_w2 = store.add("unet.temb.w2", Tensor<T>::randn(rng, {ne, ne}, 1.0 / std::sqrt(ne)));
        emb_b2 = store.add("unet.temb.b2", Tensor<T>::zeros({ne}));

        const int c0 = cfg_.channels_at(0);
        stem_w = store.add("unet.stem.w",
                           Tensor<T>::randn(rng, {c0, 2 * clat, 3, 3}, std::sqrt(2.0 / (2 * clat * 9))));
        stem_b = store.add("unet.stem.b", Tensor<T>::zeros({c0}));

        const int L = cfg_.levels();
        for (int l = 0; l < L; ++l) {
            const int c = cfg_.channels_at(l);
            if (l > 0) {
                const int cp = cfg_.channels_at(l - 1);
                down_w.push_back(store.add("unet.down" + std::to_string(l) + ".w",
                                           Tensor<T>::randn(rng, {c, cp, 4, 4}, std::sqrt(2.0 / (cp * 16)))));
                down_b.push_back(store.add("unet.down" + std::to_string(l) + ".b", Tensor<T>::zeros({c})));
            }
            res_down.emplace_back(store, "unet.enc" + std::to_string(l) + ".res", c, c, ne, rng);
            if (cfg_.has_attention(l)) {
                attn_down.emplace_back(AttnBlock<T>(store, "unet.enc" + std::to_string(l) + ".attn", c,
                                                    cfg_.embed_dim, cfg_.head_count, cfg_.attention_mode, rng));
            } else {
                attn_down.emplace_back(std::nullopt);
            }
        }

        const int cm = cfg_.channels_at(L - 1);
        mid_res1 = ResBlock<T>(store, "unet.mid.res1", cm, cm, ne, rng);
        if (cfg_.has_attention(L - 1)) {
            mid_attn = AttnBlock<T>(store, "unet.mid.attn", cm, cfg_.embed_dim, cfg_.head_count,
                                    cfg_.attention_mode, rng);
        }
        mid_res2 = ResBlock<T>(store, "unet.mid.res2", cm, cm, ne, rng);

        for (int l = L - 1; l >= 0; --l) {
            const int c = cfg_.channels_at(l);
            res_up.emplace_back(store, "unet.dec" + std::to_string(l) + ".res", 2 * c, c, ne, rng);
            if (cfg_.has_attention(l)) {
                attn_up.emplace_back(AttnBlock<T>(store, "unet.dec" + std::to_string(l) + ".attn", c,
                                                  cfg_.embed_dim, cfg_.head_count, cfg_.attention_mode, rng));
            } else {
                attn_up.emplace_back(std::nullopt);
            }
            if (l > 0) {
                const int cp = cfg_.channels_at(l - 1);
                up_w.push_back(store.add("unet.up" + std::to_string(l) + ".w",
                                         Tensor<T>::randn(rng, {cp, c, 3, 3}, std::sqrt(2.0 / (c * 9)))));
                up_b.push_back(store.add("unet.up" + std::to_string(l) + ".b", Tensor<T>::zeros({cp})));
            }
        }

        out_norm_g = store.add("unet.out.norm.g", Tensor<T>::full({c0}, T(1)));
        out_norm_b = store.add("unet.out.norm.b", Tensor<T>::zeros({c0}));
        out_w = store.add("unet.out.w", Tensor<T>::zeros({clat, c0, 3, 3}));
        out_b = store.add("unet.out.b", Tensor<T>::zeros({clat}));
    }

    const BackboneConfig& config() const { return cfg_; }

    static void trace(const char* stage, const Tensor<T>& x) {
        if (!std::getenv("FPAINT_TRACE")) return;
        double ss = 0;
        for (T v : *x.data) ss += static_cast<double>(v) * v;
        std::fprintf(stderr, "[trace] %-12s rms=%.4g shape=%s\n", stage,
                     std::sqrt(ss / x.numel()), shape_str(x.shape).c_str());
    }

    DenoiseOutput<T> forward(const Tensor<T>& noisy_src, const Tensor<T>& noisy_tgt, double t,
                             const Tensor<T>& source_latent, const Tensor<T>& emb_tokens,
                             const ControlFeatures<T>* ctrl,
                             const std::map<int, Tensor<T>>* ctrl_scales,
                             const DragPointSet* drags) const {
        const int clat = cfg_.latent_channels();
        auto check_latent = [&](const Tensor<T>& z, const char* name) {
            if (z.ndim() != 3 || z.dim(0) != clat || z.dim(1) != cfg_.latent_h() || z.dim(2) != cfg_.latent_w()) {
                throw std::invalid_argument(std::string("denoise: ") + name + " has wrong shape " +
                                            shape_str(z.shape));
            }
        };
        check_latent(noisy_src, "noisy source latent");
        check_latent(noisy_tgt, "noisy target latent");
        check_latent(source_latent, "source latent");
        if (t < 0) throw std::invalid_argument("denoise: negative noise level");
        if ((ctrl == nullptr) != (ctrl_scales == nullptr)) {
            throw std::invalid_argument("denoise: control features and scales must come together");
        }
        if (drags) drags->validate();

        DenoiseOutput<T> out;
        Tensor<T> emb0 = sinusoidal_embedding<T>(t, cfg_.noise_emb_dim);
        Tensor<T> emb = bias_add_rows(matmul(silu(bias_add_rows(matmul(emb0, emb_w1), emb_b1)), emb_w2), emb_b2);

        Tensor<T> xs = conv2d(concat_dim0(noisy_src, source_latent), stem_w, stem_b, 1, 1);
        Tensor<T> xt = conv2d(concat_dim0(noisy_tgt, source_latent), stem_w, stem_b, 1, 1);
        trace("stem", xt);

        const int L = cfg_.levels();
        std::vector<Tensor<T>> skip_s(L), skip_t(L);
        for (int l = 0; l < L; ++l) {
            if (l > 0) {
                xs = conv2d(xs, down_w[l - 1], down_b[l - 1], 2, 1);
                xt = conv2d(xt, down_w[l - 1], down_b[l - 1], 2, 1);
            }
            if (ctrl && cfg_.has_attention(l)) {
                auto it = ctrl->by_level.find(l);
                if (it == ctrl->by_level.end()) {
                    throw std::invalid_argument("denoise: missing control features for level " +
                                                std::to_string(l));
                }
                xt = inject_target_only(xt, it->second, ctrl_scales->at(l));
            }
            xs = res_down[l].forward(xs, emb);
            xt = res_down[l].forward(xt, emb);
            trace(("enc" + std::to_string(l)).c_str(), xt);
            if (attn_down[l]) {
                auto [s2, t2] = attn_down[l]->forward(xs, xt, emb_tokens, drags, &out.records);
                xs = s2;
                xt = t2;
            }
            skip_s[l] = xs;
            skip_t[l] = xt;
        }

        xs = mid_res1.forward(xs, emb);
        xt = mid_res1.forward(xt, emb);
        if (mid_attn) {
            auto [s2, t2] = mid_attn->forward(xs, xt, emb_tokens, drags, &out.records);
            xs = s2;
            xt = t2;
        }
        xs = mid_res2.forward(xs, emb);
        xt = mid_res2.forward(xt, emb);
        trace("mid", xt);

        int ui = 0;
        for (int l = L - 1; l >= 0; --l, ++ui) {
            xs = res_up[ui].forward(concat_dim0(xs, skip_s[l]), emb);
            xt = res_up[ui].forward(concat_dim0(xt, skip_t[l]), emb);
            if (attn_up[ui]) {
                auto [s2, t2] = attn_up[ui]->forward(xs, xt, emb_tokens, drags, &out.records);
                xs = s2;
                xt = t2;
            }
            if (l > 0) {
                xs = conv2d(upsample_nearest2(xs), up_w[ui], up_b[ui], 1, 1);
                xt = conv2d(upsample_nearest2(xt), up_w[ui], up_b[ui], 1, 1);
            }
            trace(("dec" + std::to_string(l)).c_str(), xt);
        }

        xs = conv2d(silu(channel_norm(xs, out_norm_g, out_norm_b)), out_w, out_b, 1, 1);
        xt = conv2d(silu(channel_norm(xt, out_norm_g, out_norm_b)), out_w, out_b, 1, 1);
        out.eps_src = xs;
        out.eps_tgt = xt;
        return out;
    }

private:
    BackboneConfig cfg_;
    Tensor<T> emb_w1, emb_b1, emb_w2, emb_b2;
    Tensor<T> stem_w, stem_b;
    std::vector<Tensor<T>> down_w, down_b;
    std::vector<ResBlock<T>> res_down;
    std::vector<std::optional<AttnBlock<T>>> attn_down;
    ResBlock<T> mid_res1, mid_res2;
    std::optional<AttnBlock<T>> mid_attn;
    std::vector<ResBlock<T>> res_up;
    std::vector<std::optional<AttnBlock<T>>> attn_up;
    std::vector<Tensor<T>> up_w, up_b;
    Tensor<T> out_norm_g, out_norm_b, out_w, out_b;
};

}  // namespace fpaint
