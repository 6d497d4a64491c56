#include <benchmark/benchmark.h>

#include "fpaint/datagen.hpp"
#include "fpaint/evalkit.hpp"
#include "fpaint/model.hpp"
#include "fpaint/sampler.hpp"

using namespace fpaint;

static void BM_Matmul64(benchmark::State& state) {
    Rng rng(1);
    Tensor<float> a = Tensor<float>::randn(rng, {64, 64});
    Tensor<float> b = Tensor<float>::randn(rng, {64, 64});
    NoGradGuard ng;
    for (auto _ : state) {
        auto c = matmul(a, b);
        benchmark::DoNotOptimize(c.ptr());
    }
}
BENCHMARK(BM_Matmul64);

static void BM_Conv2d(benchmark::State& state) {
    Rng rng(2);
    Tensor<float> x = Tensor<float>::randn(rng, {64, 16, 16});
    Tensor<float> w = Tensor<float>::randn(rng, {64, 64, 3, 3});
    Tensor<float> b = Tensor<float>::zeros({64});
    NoGradGuard ng;
    for (auto _ : state) {
        auto y = conv2d(x, w, b, 1, 1);
        benchmark::DoNotOptimize(y.ptr());
    }
}
BENCHMARK(BM_Conv2d);

static void BM_MatchingAttention(benchmark::State& state) {
    Rng rng(3);
    ParamStore<float> store;
    auto w = make_attention_weights(store, "attn", 64, 4, rng, false);
    Tensor<float> src = Tensor<float>::randn(rng, {64, 64});
    Tensor<float> tgt = Tensor<float>::randn(rng, {64, 64});
    auto gs = TokenGrid<float>::from_tokens(8, 8, src);
    auto gt = TokenGrid<float>::from_tokens(8, 8, tgt);
    NoGradGuard ng;
    for (auto _ : state) {
        auto [out, rec] = matching_attention(gt, gs, w, "bench");
        benchmark::DoNotOptimize(out.tokens.ptr());
    }
}
BENCHMARK(BM_MatchingAttention);

static void BM_DenoiseForward(benchmark::State& state) {
    ModelConfig cfg;
    cfg.signal = SignalKind::sketch;
    EditModel<float> model(cfg, 7);
    Rng rng(4);
    const int clat = cfg.backbone.latent_channels();
    Tensor<float> zs = Tensor<float>::randn(rng, {clat, 16, 16});
    Tensor<float> zt = Tensor<float>::randn(rng, {clat, 16, 16});
    Tensor<float> img = Tensor<float>::zeros({3, 64, 64});
    Tensor<float> emb = model.embed_source(img);
    NoGradGuard ng;
    for (auto _ : state) {
        auto out = model.denoise(zs, zt, 500.0, zs, emb, nullptr, nullptr);
        benchmark::DoNotOptimize(out.eps_tgt.ptr());
    }
}
BENCHMARK(BM_DenoiseForward);

static void BM_Ssim(benchmark::State& state) {
    Rng rng(5);
    Tensor<float> a = Tensor<float>::randn(rng, {3, 64, 64}, 0.2);
    Tensor<float> b = Tensor<float>::randn(rng, {3, 64, 64}, 0.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(a, b));
    }
}
BENCHMARK(BM_Ssim);

static void BM_BlockMatchingFlow(benchmark::State& state) {
    Rng rng(6);
    SyntheticScene scene = make_random_scene(64, 64, 8, rng);
    Tensor<float> f0 = render_frame(scene, 0);
    Tensor<float> f7 = render_frame(scene, 7);
    for (auto _ : state) {
        auto flow = estimate_flow_block_matching(f0, f7, 5, 8);
        benchmark::DoNotOptimize(flow.dx.data());
    }
}
BENCHMARK(BM_BlockMatchingFlow);

static void BM_SoftmaxSplat(benchmark::State& state) {
    Rng rng(7);
    SyntheticScene scene = make_random_scene(64, 64, 8, rng);
    Tensor<float> src = render_frame(scene, 0);
    FlowField flow = analytic_flow(scene, 0, 7, FlowField::Direction::source_to_target);
    Tensor<float> imp = Tensor<float>::zeros({64, 64});
    for (auto _ : state) {
        auto out = softmax_splat(src, flow, imp);
        benchmark::DoNotOptimize(out.ptr());
    }
}
BENCHMARK(BM_SoftmaxSplat);

BENCHMARK_MAIN();
