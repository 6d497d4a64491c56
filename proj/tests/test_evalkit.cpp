#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fpaint/datagen.hpp"
#include "fpaint/evalkit.hpp"

using namespace fpaint;

namespace {

AttentionRecord<float> record_from(int h, int w, std::vector<float> weights) {
    AttentionRecord<float> r;
    r.layer_id = "t";
    r.h_tokens = h;
    r.w_tokens = w;
    r.weights = Tensor<float>({h * w, h * w}, std::move(weights));
    return r;
}

Correspondence identity_corr(int h, int w) {
    Correspondence c;
    c.h_tokens = h;
    c.w_tokens = w;
    for (int i = 0; i < h * w; ++i) {
        c.src_index.push_back(i);
        c.visible.push_back(1);
    }
    return c;
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
    Rng rng(1);
    Tensor<float> img = Tensor<float>::zeros({3, 32, 32});
    for (auto& v : *img.data) v = static_cast<float>(rng.uniform());
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor<float> a = Tensor<float>::zeros({3, 24, 24});
        Tensor<float> b = Tensor<float>::zeros({3, 24, 24});
        for (auto& v : *a.data) v = static_cast<float>(rng.uniform());
        for (auto& v : *b.data) v = static_cast<float>(rng.uniform());
        CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("ssim of constant zero vs constant one matches the closed form") {
    Tensor<float> zeros = Tensor<float>::zeros({3, 16, 16});
    Tensor<float> ones = Tensor<float>::full({3, 16, 16}, 1.f);
    // mu_a=0, mu_b=1, all variances zero:
    // ((2*0*1 + C1)(0 + C2)) / ((0+1+C1)(0+0+C2)) = C1 / (1+C1)
    const double want = 1e-4 / (1.0 + 1e-4);
    CHECK(ssim(zeros, ones) == doctest::Approx(want).epsilon(1e-9));
    CHECK(ssim(zeros, ones) == doctest::Approx(9.999e-5).epsilon(1e-3));
}

TEST_CASE("ssim rejects dimension mismatches and trusts luma for RGB") {
    Tensor<float> a = Tensor<float>::zeros({3, 16, 16});
    Tensor<float> b = Tensor<float>::zeros({3, 16, 32});
    CHECK_THROWS(ssim(a, b));
}

TEST_CASE("matching accuracy is 1 when argmax follows C and handles occlusion") {
    auto corr = identity_corr(2, 2);
    std::map<int, Correspondence> by_stride{{8, corr}};
    // identity-dominant rows
    std::vector<float> w(16, 0.1f);
    for (int i = 0; i < 4; ++i) w[i * 4 + i] = 0.7f;
    auto rec = record_from(2, 2, w);
    CHECK(matching_accuracy({rec}, by_stride, 16) == doctest::Approx(1.0));

    // all-invisible: NaN sentinel, not 0.0
    Correspondence none = corr;
    std::fill(none.visible.begin(), none.visible.end(), 0);
    std::fill(none.src_index.begin(), none.src_index.end(), kNoCorrespondence);
    std::map<int, Correspondence> by_stride2{{8, none}};
    CHECK(std::isnan(matching_accuracy({rec}, by_stride2, 16)));
}

TEST_CASE("matching accuracy of uniform attention approaches 1/N") {
    // expected accuracy over random one-hot C is 1/16; with ties broken by
    // first index, use strictly increasing noise to randomize the argmax
    Rng rng(3);
    const int n = 16;
    std::map<int, Correspondence> by_stride;
    int hits = 0, total = 0;
    const int rounds = 3000;
    for (int round = 0; round < rounds; ++round) {
        std::vector<float> w(static_cast<std::size_t>(n) * n);
        for (auto& v : w) v = static_cast<float>(rng.uniform());  // near-uniform, random argmax
        Correspondence corr;
        corr.h_tokens = 4;
        corr.w_tokens = 4;
        for (int i = 0; i < n; ++i) {
            corr.src_index.push_back(rng.below_int(n));
            corr.visible.push_back(1);
        }
        by_stride[16] = corr;
        auto rec = record_from(4, 4, w);
        const double acc = matching_accuracy({rec}, by_stride, 64);
        hits += static_cast<int>(std::lround(acc * n));
        total += n;
    }
    const double p = 1.0 / n;
    const double sigma = std::sqrt(p * (1 - p) * total);
    CHECK(std::fabs(hits - p * total) < 4 * sigma);
}

TEST_CASE("matching accuracy is invariant under record permutation") {
    Rng rng(4);
    std::map<int, Correspondence> by_stride{{8, identity_corr(2, 2)}};
    std::vector<AttentionRecord<float>> records;
    for (int k = 0; k < 3; ++k) {
        std::vector<float> w(16);
        for (auto& v : w) v = static_cast<float>(rng.uniform());
        records.push_back(record_from(2, 2, w));
    }
    const double a = matching_accuracy(records, by_stride, 16);
    std::swap(records[0], records[2]);
    CHECK(matching_accuracy(records, by_stride, 16) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("heatmap export: one-hot row, uniform row, dimensions") {
    std::vector<float> w(16, 0.f);
    w[1 * 4 + 2] = 1.f;  // query token 1 attends to source token 2
    auto rec = record_from(2, 2, w);
    Heatmap hm = export_attention_heatmap(rec, 1, 16, 16);
    CHECK(hm.h == 16);
    CHECK(hm.w == 16);
    // source token 2 is cell (1,0): bright block, everything else black
    int bright = 0, black = 0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const std::uint8_t v = hm.pixels[y * 16 + x];
            if (y >= 8 && x < 8) {
                CHECK(v == 255);
                ++bright;
            } else {
                CHECK(v == 0);
                ++black;
            }
        }
    CHECK(bright == 64);

    // uniform row maps to all zeros under min-max with the documented rule
    auto uni = record_from(2, 2, std::vector<float>(16, 0.25f));
    Heatmap flat = export_attention_heatmap(uni, 0, 16, 16);
    for (auto v : flat.pixels) CHECK(v == 0);

    CHECK_THROWS(export_attention_heatmap(rec, 99, 16, 16));
}

TEST_CASE("ablation csv round-trips losslessly") {
    std::vector<AblationRow> rows{{"matching", "1", 0.812345678, 0.91},
                                  {"matching", "mean", 0.80000001, 0.9},
                                  {"temporal", "2", 0.7512, std::numeric_limits<double>::quiet_NaN()}};
    const std::string csv = format_ablation_csv(rows);
    auto back = parse_ablation_csv(csv);
    REQUIRE(back.size() == 3);
    CHECK(back[0].label == "matching");
    CHECK(back[0].seed == "1");
    CHECK(back[0].mean_ssim == doctest::Approx(rows[0].mean_ssim).epsilon(1e-9));
    CHECK(std::isnan(back[2].matching_acc));
    // re-format is byte-identical
    CHECK(format_ablation_csv(back) == csv);
}

TEST_CASE("run_ablation rejects a missing checkpoint naming the config") {
    std::vector<SamplePairData> eval_set;
    std::vector<AblationRun> runs{{"matching", 1, "/nonexistent/ckpt.fpck"}};
    EvalOptions opt;
    CHECK_THROWS_WITH_AS(run_ablation(eval_set, runs, opt), doctest::Contains("matching"),
                         std::runtime_error);
}
