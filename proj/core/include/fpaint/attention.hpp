#pragma once

#include <string>
#include <vector>

#include "fpaint/ops.hpp"
#include "fpaint/params.hpp"

namespace fpaint {

enum class AttentionMode { temporal, crossframe, matching };

inline const char* attention_mode_name(AttentionMode m) {
    switch (m) {
        case AttentionMode::temporal: return "temporal";
        case AttentionMode::crossframe: return "crossframe";
        case AttentionMode::matching: return "matching";
    }
    return "?";
}

// Per-frame spatial grid of d-dimensional tokens. Token i sits at cell
// (i / w_tokens, i % w_tokens); this mapping is fixed repo-wide.
template <typename T>
struct TokenGrid {
    int h_tokens = 0;
    int w_tokens = 0;
    int dim = 0;
    Tensor<T> tokens;  // [N, d]

    int count() const { return h_tokens * w_tokens; }

    static TokenGrid from_tokens(int h, int w, Tensor<T> t) {
        TokenGrid g;
        g.h_tokens = h;
        g.w_tokens = w;
        g.dim = t.dim(1);
        if (t.dim(0) != h * w) throw std::invalid_argument("TokenGrid: token count != h*w");
        g.tokens = std::move(t);
        return g;
    }
};

template <typename T>
struct AttentionWeights {
    int dim = 0;
    int head_count = 1;
    Tensor<T> wq, wk, wv, wo;  // each [d, d]
};

// Head-averaged attention map captured from one matching-attention site,
// kept in-graph so the matching loss can differentiate through it.
template <typename T>
struct AttentionRecord {
    std::string layer_id;
    int h_tokens = 0;
    int w_tokens = 0;
    Tensor<T> weights;  // [Nq, Nk]
};

template <typename T>
AttentionWeights<T> make_attention_weights(ParamStore<T>& store, const std::string& prefix, int dim,
                                           int head_count, Rng& rng, bool zero_out_proj = true) {
    if (head_count < 1 || dim % head_count != 0) {
        throw std::invalid_argument("attention: dim " + std::to_string(dim) +
                                    " not divisible by head_count " + std::to_string(head_count));
    }
    AttentionWeights<T> w;
    w.dim = dim;
    w.head_count = head_count;
    const double std = 1.0 / std::sqrt(static_cast<double>(dim));
    w.wq = store.add(prefix + ".wq", Tensor<T>::randn(rng, {dim, dim}, std));
    w.wk = store.add(prefix + ".wk", Tensor<T>::randn(rng, {dim, dim}, std));
    w.wv = store.add(prefix + ".wv", Tensor<T>::randn(rng, {dim, dim}, std));
    w.wo = store.add(prefix + ".wo", zero_out_proj ? Tensor<T>::zeros({dim, dim})
                                                   : Tensor<T>::randn(rng, {dim, dim}, std));
    return w;
}

// value copy, gradient storage stays independent
template <typename T>
void copy_attention_weights(AttentionWeights<T>& dst, const AttentionWeights<T>& src) {
    if (dst.dim != src.dim || dst.head_count != src.head_count) {
        throw std::invalid_argument("copy_attention_weights: layout mismatch");
    }
    *dst.wq.data = *src.wq.data;
    *dst.wk.data = *src.wk.data;
    *dst.wv.data = *src.wv.data;
    *dst.wo.data = *src.wo.data;
}

// fresh independently-registered weights initialized from an existing set
template <typename T>
AttentionWeights<T> init_matching_from_spatial(const AttentionWeights<T>& spatial,
                                               ParamStore<T>& store, const std::string& prefix) {
    AttentionWeights<T> w;
    w.dim = spatial.dim;
    w.head_count = spatial.head_count;
    w.wq = store.add(prefix + ".wq", spatial.wq.clone_detached());
    w.wk = store.add(prefix + ".wk", spatial.wk.clone_detached());
    w.wv = store.add(prefix + ".wv", spatial.wv.clone_detached());
    w.wo = store.add(prefix + ".wo", spatial.wo.clone_detached());
    return w;
}

template <typename T>
struct AttendResult {
    Tensor<T> output;    // [Nq, d], before the output projection
    Tensor<T> attn_avg;  // [Nq, Nk], head-averaged
};

// scaled dot-product over already-projected Q/K/V, per-head dimension in the
// score denominator
template <typename T>
AttendResult<T> attend_projected(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                 int head_count) {
    const int d = q.dim(1);
    const int dh = d / head_count;
    std::vector<Tensor<T>> head_outputs;
    Tensor<T> avg;
    for (int h = 0; h < head_count; ++h) {
        Tensor<T> qh = slice_cols(q, h * dh, dh);
        Tensor<T> kh = slice_cols(k, h * dh, dh);
        Tensor<T> vh = slice_cols(v, h * dh, dh);
        Tensor<T> scores = scale(matmul(qh, transpose2d(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        Tensor<T> attn = softmax_rows(scores);
        head_outputs.push_back(matmul(attn, vh));
        avg = (h == 0) ? attn : add(avg, attn);
    }
    AttendResult<T> r;
    r.output = (head_count == 1) ? head_outputs[0] : concat_cols(head_outputs);
    r.attn_avg = scale(avg, 1.0 / head_count);
    return r;
}

template <typename T>
AttendResult<T> attend_tokens(const Tensor<T>& q_tokens, const Tensor<T>& kv_tokens,
                              const AttentionWeights<T>& w) {
    AttendResult<T> r = attend_projected(matmul(q_tokens, w.wq), matmul(kv_tokens, w.wk),
                                         matmul(kv_tokens, w.wv), w.head_count);
    r.output = matmul(r.output, w.wo);
    return r;
}

template <typename T>
void check_grids_match(const TokenGrid<T>& a, const TokenGrid<T>& b, const char* op) {
    if (a.h_tokens != b.h_tokens || a.w_tokens != b.w_tokens || a.dim != b.dim) {
        throw std::invalid_argument(std::string(op) + ": token grids disagree");
    }
}

// per-frame self-attention
template <typename T>
TokenGrid<T> spatial_attention(const TokenGrid<T>& frame, const AttentionWeights<T>& w) {
    TokenGrid<T> out = frame;
    out.tokens = attend_tokens(frame.tokens, frame.tokens, w).output;
    return out;
}

// attention across the 2-frame axis, independently at each spatial location
template <typename T>
std::pair<TokenGrid<T>, TokenGrid<T>> temporal_attention(const TokenGrid<T>& frame0,
                                                         const TokenGrid<T>& frame1,
                                                         const AttentionWeights<T>& w) {
    check_grids_match(frame0, frame1, "temporal_attention");
    const int n = frame0.count();
    std::vector<Tensor<T>> out0, out1;
    out0.reserve(n);
    out1.reserve(n);
    for (int i = 0; i < n; ++i) {
        Tensor<T> seq = concat_dim0(slice_dim0(frame0.tokens, i, 1), slice_dim0(frame1.tokens, i, 1));
        Tensor<T> res = attend_tokens(seq, seq, w).output;  // [2, d]
        out0.push_back(slice_dim0(res, 0, 1));
        out1.push_back(slice_dim0(res, 1, 1));
    }
    TokenGrid<T> g0 = frame0, g1 = frame1;
    g0.tokens = concat_dim0(out0);
    g1.tokens = concat_dim0(out1);
    return {g0, g1};
}

// target queries over concatenated [source; target] keys/values
template <typename T>
TokenGrid<T> cross_frame_attention(const TokenGrid<T>& target, const TokenGrid<T>& source,
                                   const AttentionWeights<T>& w) {
    check_grids_match(target, source, "cross_frame_attention");
    Tensor<T> kv = concat_dim0(source.tokens, target.tokens);
    TokenGrid<T> out = target;
    out.tokens = attend_tokens(target.tokens, kv, w).output;
    return out;
}

// target queries, source keys/values; the head-averaged map is returned for
// supervision and visualization
template <typename T>
std::pair<TokenGrid<T>, AttentionRecord<T>> matching_attention(const TokenGrid<T>& target,
                                                               const TokenGrid<T>& source,
                                                               const AttentionWeights<T>& w,
                                                               const std::string& layer_id) {
    check_grids_match(target, source, "matching_attention");
    AttendResult<T> r = attend_projected(matmul(target.tokens, w.wq), matmul(source.tokens, w.wk),
                                         matmul(source.tokens, w.wv), w.head_count);
    TokenGrid<T> out = target;
    out.tokens = matmul(r.output, w.wo);
    AttentionRecord<T> rec;
    rec.layer_id = layer_id;
    rec.h_tokens = target.h_tokens;
    rec.w_tokens = target.w_tokens;
    rec.weights = r.attn_avg;
    return {out, rec};
}

// zero-pad fusion: the source frame passes through untouched (the same
// tensor, so it stays bit-identical for arbitrary matching output), the
// target frame gains the matching contribution
template <typename T>
std::pair<TokenGrid<T>, TokenGrid<T>> fuse_outputs(const TokenGrid<T>& spatial_src,
                                                   const TokenGrid<T>& spatial_tgt,
                                                   const TokenGrid<T>& match_out) {
    check_grids_match(spatial_tgt, match_out, "fuse_outputs");
    TokenGrid<T> tgt = spatial_tgt;
    tgt.tokens = add(spatial_tgt.tokens, match_out.tokens);
    return {spatial_src, tgt};
}

}  // namespace fpaint
