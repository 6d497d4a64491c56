#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpaint/attention.hpp"
#include "fpaint/ops.hpp"
#include "fpaint/params.hpp"

namespace fpaint {

enum class SignalKind { sketch, drag, coarse };

inline const char* signal_kind_name(SignalKind k) {
    switch (k) {
        case SignalKind::sketch: return "sketch";
        case SignalKind::drag: return "drag";
        case SignalKind::coarse: return "coarse";
    }
    return "?";
}

inline SignalKind signal_kind_from_name(const std::string& s) {
    if (s == "sketch") return SignalKind::sketch;
    if (s == "drag") return SignalKind::drag;
    if (s == "coarse") return SignalKind::coarse;
    throw std::invalid_argument("unknown signal kind '" + s + "' (expected sketch|drag|coarse)");
}

inline int signal_raster_channels(SignalKind k) {
    switch (k) {
        case SignalKind::sketch: return 1;
        case SignalKind::coarse: return 3;
        case SignalKind::drag: return 0;  // drag points bypass the raster encoder
    }
    return 0;
}

struct DragPoint {
    int sx = 0, sy = 0;  // source pixel
    int tx = 0, ty = 0;  // target pixel
};

struct DragPointSet {
    int image_w = 0, image_h = 0;
    std::vector<DragPoint> points;

    void validate() const {
        for (const auto& p : points) {
            if (p.sx < 0 || p.sx >= image_w || p.sy < 0 || p.sy >= image_h || p.tx < 0 ||
                p.tx >= image_w || p.ty < 0 || p.ty >= image_h) {
                throw std::invalid_argument("drag point out of image bounds");
            }
        }
    }

    bool empty() const { return points.empty(); }

    // (source_cell, target_cell) token indices at the given pixel strides
    std::vector<std::pair<int, int>> token_pairs(int stride_x, int stride_y, int w_tokens) const {
        std::vector<std::pair<int, int>> out;
        out.reserve(points.size());
        for (const auto& p : points) {
            const int sc = (p.sy / stride_y) * w_tokens + (p.sx / stride_x);
            const int tc = (p.ty / stride_y) * w_tokens + (p.tx / stride_x);
            out.emplace_back(sc, tc);
        }
        return out;
    }
};

// Adds the source-frame token under each source point to the target-frame
// token under the matching target point. Pairs landing in one cell sum, so
// the result does not depend on list order. The source frame is untouched.
template <typename T>
std::pair<TokenGrid<T>, TokenGrid<T>> drag_token_inject(const TokenGrid<T>& src,
                                                        const TokenGrid<T>& tgt,
                                                        const DragPointSet& points) {
    check_grids_match(src, tgt, "drag_token_inject");
    if (points.empty()) return {src, tgt};
    points.validate();
    if (points.image_w % tgt.w_tokens != 0 || points.image_h % tgt.h_tokens != 0) {
        throw std::invalid_argument("drag_token_inject: image dims not divisible by token grid");
    }
    const int stride_x = points.image_w / tgt.w_tokens;
    const int stride_y = points.image_h / tgt.h_tokens;
    TokenGrid<T> out = tgt;
    out.tokens = row_scatter_add(tgt.tokens, src.tokens,
                                 points.token_pairs(stride_x, stride_y, tgt.w_tokens));
    return {src, out};
}

// Per-level additive features produced from an editing-signal raster.
template <typename T>
struct ControlFeatures {
    std::map<int, Tensor<T>> by_level;  // level index -> [C_level, h, w]
};

// target-frame features += scale * control; the source frame never sees the
// signal
template <typename T>
Tensor<T> inject_target_only(const Tensor<T>& target_features, const Tensor<T>& control_features,
                             const Tensor<T>& level_scale) {
    if (target_features.shape != control_features.shape) {
        throw std::invalid_argument("inject_target_only: control features at wrong resolution, " +
                                    shape_str(control_features.shape) + " vs " +
                                    shape_str(target_features.shape));
    }
    return add(target_features, smul(level_scale, control_features));
}

struct ControlLevelSpec {
    int channels = 0;
    int h = 0, w = 0;
    bool emit = false;  // true for attention-bearing backbone levels
};

// Conv stem down to the finest latent grid, then one residual block per
// backbone level with stride-2 downsampling between levels. Levels flagged
// emit get a 1x1 output projection and a zero-initialized learnable scale,
// so a fresh encoder injects nothing.
template <typename T>
class ControlEncoder {
public:
    ControlEncoder(int in_channels, int image_h, int image_w, int patch_factor,
                   std::vector<ControlLevelSpec> levels, ParamStore<T>& store, Rng& rng)
        : in_channels_(in_channels), image_h_(image_h), image_w_(image_w), levels_(std::move(levels)) {
        auto conv_init = [&](const std::string& name, int cout, int cin, int k) {
            const double std = std::sqrt(2.0 / (cin * k * k));
            weights_["control." + name + ".w"] =
                store.add("control." + name + ".w", Tensor<T>::randn(rng, {cout, cin, k, k}, std));
            weights_["control." + name + ".b"] = store.add("control." + name + ".b", Tensor<T>::zeros({cout}));
        };
        int f = patch_factor;
        while (f > 1) {
            if (f % 2 != 0) throw std::invalid_argument("ControlEncoder: patch_factor must be a power of 2");
            f /= 2;
            ++stem_count_;
        }
        int cin = in_channels;
        const int stem_c = levels_.empty() ? 16 : levels_[0].channels;
        for (int i = 0; i < stem_count_; ++i) {
            conv_init("stem" + std::to_string(i), stem_c, cin, 4);  // stride-2 convs are k4 p1
            cin = stem_c;
        }
        int prev = stem_c;
        for (std::size_t lvl = 0; lvl < levels_.size(); ++lvl) {
            const std::string tag = "level" + std::to_string(lvl);
            const int c = levels_[lvl].channels;
            if (lvl > 0) conv_init(tag + ".down", c, prev, 4);
            conv_init(tag + ".res1", c, c, 3);
            conv_init(tag + ".res2", c, c, 3);
            if (levels_[lvl].emit) {
                conv_init(tag + ".proj", c, c, 1);
                scales_[static_cast<int>(lvl)] = store.add("control." + tag + ".scale", Tensor<T>::zeros({1}));
            }
            prev = c;
        }
    }

    // raster [C_s, H, W] in [0,1] -> per-level feature maps (before scaling)
    ControlFeatures<T> encode(const Tensor<T>& raster) const {
        if (raster.ndim() != 3 || raster.dim(0) != in_channels_ || raster.dim(1) != image_h_ ||
            raster.dim(2) != image_w_) {
            throw std::invalid_argument("ControlEncoder: raster has wrong dims " + shape_str(raster.shape));
        }
        Tensor<T> x = raster;
        for (int i = 0; i < stem_count_; ++i) {
            x = silu(conv("stem" + std::to_string(i), x, 2));
        }
        ControlFeatures<T> out;
        for (std::size_t lvl = 0; lvl < levels_.size(); ++lvl) {
            const std::string tag = "level" + std::to_string(lvl);
            if (lvl > 0) x = silu(conv(tag + ".down", x, 2));
            Tensor<T> r = conv(tag + ".res2", silu(conv(tag + ".res1", x, 1)), 1);
            x = add(x, r);
            if (x.dim(1) != levels_[lvl].h || x.dim(2) != levels_[lvl].w) {
                throw std::invalid_argument("ControlEncoder: level " + std::to_string(lvl) +
                                            " resolution mismatch");
            }
            if (levels_[lvl].emit) {
                out.by_level[static_cast<int>(lvl)] = conv(tag + ".proj", x, 1);
            }
        }
        return out;
    }

    const Tensor<T>& level_scale(int level) const {
        auto it = scales_.find(level);
        if (it == scales_.end()) {
            throw std::invalid_argument("ControlEncoder: no scale for level " + std::to_string(level));
        }
        return it->second;
    }

private:
    Tensor<T> conv(const std::string& name, const Tensor<T>& x, int stride) const {
        const Tensor<T>& w = weights_.at("control." + name + ".w");
        const Tensor<T>& b = weights_.at("control." + name + ".b");
        const int k = w.dim(2);
        const int pad = (k == 4) ? 1 : k / 2;
        return conv2d(x, w, b, stride, pad);
    }

    int in_channels_;
    int image_h_, image_w_;
    int stem_count_ = 0;
    std::vector<ControlLevelSpec> levels_;
    std::map<std::string, Tensor<T>> weights_;
    std::map<int, Tensor<T>> scales_;
};

}  // namespace fpaint
