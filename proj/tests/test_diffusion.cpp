#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fpaint/diffusion.hpp"
#include "fpaint/gradcheck.hpp"

using namespace fpaint;

TEST_CASE("schedule signal decreases monotonically and t=0 is the identity") {
    NoiseSchedule sched(1000);
    CHECK(sched.alpha_bar(0) == 1.0);
    CHECK(sched.signal(0) == 1.0);
    CHECK(sched.noise(0) == 0.0);
    double prev = 1.0;
    for (int t = 1; t < 1000; t += 7) {
        const double ab = sched.alpha_bar(t);
        CHECK(ab <= prev);
        CHECK(ab >= NoiseSchedule::kMinAlphaBar);
        prev = ab;
    }
}

TEST_CASE("add_noise at t=0 returns z0 exactly") {
    NoiseSchedule sched(100);
    Rng rng(1);
    Tensor<float> z0 = Tensor<float>::randn(rng, {4, 3, 3});
    Tensor<float> eps = Tensor<float>::randn(rng, {4, 3, 3});
    Tensor<float> zt = add_noise(z0, 0, eps, sched);
    CHECK(*zt.data == *z0.data);
}

TEST_CASE("add_noise with zero noise draws gives signal(t) * z0") {
    NoiseSchedule sched(100);
    Rng rng(2);
    Tensor<float> z0 = Tensor<float>::randn(rng, {2, 2, 2});
    Tensor<float> eps = Tensor<float>::zeros({2, 2, 2});
    Tensor<float> zt = add_noise(z0, 40, eps, sched);
    const float s = static_cast<float>(sched.signal(40));
    for (std::size_t i = 0; i < z0.data->size(); ++i) {
        CHECK((*zt.data)[i] == doctest::Approx(s * (*z0.data)[i]));
    }
}

TEST_CASE("add_noise rejects t outside [0, T)") {
    NoiseSchedule sched(100);
    Tensor<float> z = Tensor<float>::zeros({1, 2, 2});
    CHECK_THROWS(add_noise(z, -1, z, sched));
    CHECK_THROWS(add_noise(z, 100, z, sched));
}

TEST_CASE("noised variance matches noise(t)^2 by Monte Carlo") {
    // z0 = 0, 10^4 draws, tolerance 5%
    NoiseSchedule sched(1000);
    Rng rng(3);
    const int t = 620;
    const int draws = 10000;
    double sum_sq = 0.0;
    Tensor<float> z0 = Tensor<float>::zeros({1, 1, 1});
    for (int i = 0; i < draws; ++i) {
        Tensor<float> eps = Tensor<float>::randn(rng, {1, 1, 1});
        Tensor<float> zt = add_noise(z0, t, eps, sched);
        sum_sq += static_cast<double>((*zt.data)[0]) * (*zt.data)[0];
    }
    const double want = sched.noise(t) * sched.noise(t);
    CHECK(sum_sq / draws == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("diffusion loss zero cases and masking contract") {
    Rng rng(4);
    Tensor<double> es = Tensor<double>::randn(rng, {2, 2, 2});
    Tensor<double> et = Tensor<double>::randn(rng, {2, 2, 2});
    // perfect prediction
    auto l0 = diffusion_loss(es, et, es, et, true);
    CHECK((*l0.data)[0] == doctest::Approx(0.0));
    // wrong only on the source frame, reconstruction off
    Tensor<double> es_bad = Tensor<double>::randn(rng, {2, 2, 2});
    auto l1 = diffusion_loss(es_bad, et, es, et, false);
    CHECK((*l1.data)[0] == doctest::Approx(0.0));
}

TEST_CASE("diffusion loss of an all-ones residual is one") {
    Tensor<double> zero = Tensor<double>::zeros({3, 2, 2});
    Tensor<double> ones = Tensor<double>::full({3, 2, 2}, 1.0);
    auto l = diffusion_loss(ones, ones, zero, zero, true);
    CHECK((*l.data)[0] == doctest::Approx(1.0));
}

TEST_CASE("reconstruction toggle decomposes into the source-frame contribution") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<double> ehs = Tensor<double>::randn(rng, {2, 3, 3});
        Tensor<double> eht = Tensor<double>::randn(rng, {2, 3, 3});
        Tensor<double> es = Tensor<double>::randn(rng, {2, 3, 3});
        Tensor<double> et = Tensor<double>::randn(rng, {2, 3, 3});
        const double with = (*diffusion_loss(ehs, eht, es, et, true).data)[0];
        const double without = (*diffusion_loss(ehs, eht, es, et, false).data)[0];
        double src_contrib = 0.0;
        for (std::size_t i = 0; i < es.data->size(); ++i) {
            const double d = (*ehs.data)[i] - (*es.data)[i];
            src_contrib += d * d;
        }
        src_contrib /= static_cast<double>(2 * es.numel());
        CHECK(with - without == doctest::Approx(src_contrib).epsilon(1e-12));
    }
}

namespace {

Correspondence simple_corr(int h, int w, const std::vector<std::int64_t>& src,
                           const std::vector<int>& vis) {
    Correspondence c;
    c.h_tokens = h;
    c.w_tokens = w;
    for (std::size_t i = 0; i < src.size(); ++i) {
        c.visible.push_back(static_cast<std::uint8_t>(vis[i]));
        c.src_index.push_back(vis[i] ? static_cast<std::uint32_t>(src[i]) : kNoCorrespondence);
    }
    return c;
}

AttentionRecord<double> record_from(int h, int w, std::vector<double> weights) {
    AttentionRecord<double> r;
    r.layer_id = "t";
    r.h_tokens = h;
    r.w_tokens = w;
    r.weights = Tensor<double>({h * w, h * w}, std::move(weights));
    return r;
}

}  // namespace

TEST_CASE("matching loss zero cases") {
    // A == C on visible rows
    auto corr = simple_corr(1, 2, {0, 1}, {1, 1});
    auto rec = record_from(1, 2, {1, 0, 0, 1});
    std::map<int, Correspondence> by_stride{{8, corr}};
    auto l = matching_loss<double>({rec}, by_stride, 16);
    CHECK((*l.data)[0] == 0.0);

    // full occlusion: m all zero
    auto corr2 = simple_corr(1, 2, {0, 0}, {0, 0});
    auto rec2 = record_from(1, 2, {0.3, 0.7, 0.9, 0.1});
    std::map<int, Correspondence> by_stride2{{8, corr2}};
    auto l2 = matching_loss<double>({rec2}, by_stride2, 16);
    CHECK((*l2.data)[0] == 0.0);
}

TEST_CASE("matching loss equals the hand-computed masked squared error") {
    // N=2, m=[1,0], C row0=[1,0], A row0=[e/(e+1), 1/(e+1)]
    const double a = 0.7310585786300049;
    auto corr = simple_corr(1, 2, {0, 0}, {1, 0});
    auto rec = record_from(1, 2, {a, 1 - a, 0.5, 0.5});
    std::map<int, Correspondence> by_stride{{8, corr}};
    auto l = matching_loss<double>({rec}, by_stride, 16);
    const double want = (a - 1) * (a - 1) + (1 - a) * (1 - a);  // 0.144657...
    CHECK((*l.data)[0] == doctest::Approx(want).epsilon(1e-12));
    CHECK((*l.data)[0] == doctest::Approx(0.1446589762570265).epsilon(1e-9));
}

TEST_CASE("matching loss against an independent oracle on random triples") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const int g = 1 + rng.below_int(4);  // token grid g x g, N <= 16
        const int n = g * g;
        std::vector<double> weights(static_cast<std::size_t>(n) * n);
        for (auto& v : weights) v = rng.uniform();
        std::vector<std::int64_t> src(n);
        std::vector<int> vis(n);
        for (int i = 0; i < n; ++i) {
            vis[i] = rng.uniform() < 0.7 ? 1 : 0;
            src[i] = rng.below_int(n);
        }
        auto corr = simple_corr(g, g, src, vis);
        auto rec = record_from(g, g, weights);
        std::map<int, Correspondence> by_stride{{4, corr}};
        const double got = (*matching_loss<double>({rec}, by_stride, g * 4).data)[0];

        // oracle: direct triple loop over the dense masked squared error
        double sum = 0.0;
        int visible = 0;
        for (int i = 0; i < n; ++i) {
            if (!vis[i]) continue;
            ++visible;
            for (int j = 0; j < n; ++j) {
                const double c = (src[i] == j) ? 1.0 : 0.0;
                const double d = weights[static_cast<std::size_t>(i) * n + j] - c;
                sum += d * d;
            }
        }
        const double want = sum / std::max(1, visible);
        CHECK(std::fabs(got - want) < 1e-6);
    }
}

TEST_CASE("matching loss averages over records and differentiates through A") {
    ParamStore<double> store;
    Rng rng(7);
    auto scores = store.add("scores", Tensor<double>::randn(rng, {4, 4}));
    auto corr = simple_corr(2, 2, {0, 1, 2, 3}, {1, 1, 0, 1});
    std::map<int, Correspondence> by_stride{{8, corr}};
    auto loss_fn = [&] {
        AttentionRecord<double> rec;
        rec.layer_id = "x";
        rec.h_tokens = 2;
        rec.w_tokens = 2;
        rec.weights = softmax_rows(scores);
        return matching_loss<double>({rec, rec}, by_stride, 16);
    };
    auto report = grad_check<double>(loss_fn, store, 1e-5);
    CHECK(report.all_pass);
}

TEST_CASE("matching loss rejects missing resolutions") {
    auto rec = record_from(1, 2, {1, 0, 0, 1});
    std::map<int, Correspondence> empty;
    CHECK_THROWS(matching_loss<double>({rec}, empty, 16));
}

TEST_CASE("combined loss arithmetic and lambda scaling") {
    Tensor<double> ld = Tensor<double>::scalar(0.5);
    Tensor<double> lm = Tensor<double>::scalar(0.25);
    LossReport rep;
    auto total = combined_loss(ld, lm, 1.0, &rep);
    CHECK((*total.data)[0] == doctest::Approx(0.75));
    CHECK(rep.l_total == doctest::Approx(rep.l_diff + rep.lambda_match * rep.l_match).epsilon(1e-6));

    auto total0 = combined_loss(ld, lm, 0.0, &rep);
    CHECK((*total0.data)[0] == doctest::Approx(0.5));
}

TEST_CASE("matching gradient scales linearly in lambda when the diffusion path is detached") {
    ParamStore<double> store;
    Rng rng(8);
    auto scores = store.add("scores", Tensor<double>::randn(rng, {3, 3}));
    auto corr = simple_corr(1, 3, {0, 1, 2}, {1, 1, 1});
    std::map<int, Correspondence> by_stride{{4, corr}};

    auto grad_at = [&](double lambda) {
        store.zero_grad();
        AttentionRecord<double> rec;
        rec.layer_id = "x";
        rec.h_tokens = 1;
        rec.w_tokens = 3;
        rec.weights = softmax_rows(scores);
        Tensor<double> l_match = matching_loss<double>({rec}, by_stride, 12);
        Tensor<double> l_diff = Tensor<double>::scalar(0.37);  // constant: detached path
        auto total = combined_loss(l_diff, l_match, lambda);
        backward(total);
        return *store.at("scores").value.grad;
    };
    auto g05 = grad_at(0.5);
    auto g10 = grad_at(1.0);
    auto g20 = grad_at(2.0);
    for (std::size_t i = 0; i < g10.size(); ++i) {
        CHECK(g10[i] == doctest::Approx(2.0 * g05[i]).epsilon(1e-9));
        CHECK(g20[i] == doctest::Approx(2.0 * g10[i]).epsilon(1e-9));
    }
}
