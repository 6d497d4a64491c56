#pragma once

#include <map>
#include <vector>

#include "fpaint/attention.hpp"
#include "fpaint/correspondence.hpp"
#include "fpaint/ops.hpp"

namespace fpaint {

// Cosine cumulative-signal schedule over T discrete training steps. The
// cumulative signal coefficient is exactly 1 at t = 0 (noising at t = 0 is
// the identity) and decreases monotonically; alpha_bar is clamped away from
// zero so the sigma parameterization stays finite at the terminal step.
class NoiseSchedule {
public:
    explicit NoiseSchedule(int steps = 1000) : steps_(steps) {
        if (steps < 1) throw std::invalid_argument("NoiseSchedule: steps must be >= 1");
    }

    int step_count() const { return steps_; }

    double alpha_bar(double t) const {
        if (t < 0 || t > steps_) throw std::invalid_argument("NoiseSchedule: t out of range");
        constexpr double kOffset = 0.008;
        constexpr double kHalfPi = 1.5707963267948966;
        auto f = [&](double u) {
            const double arg = (u / steps_ + kOffset) / (1.0 + kOffset) * kHalfPi;
            const double c = std::cos(arg);
            return c * c;
        };
        const double raw = f(t) / f(0.0);
        if (t == 0.0) return 1.0;
        return std::clamp(raw, kMinAlphaBar, 1.0);
    }

    double signal(double t) const { return std::sqrt(alpha_bar(t)); }
    double noise(double t) const { return std::sqrt(1.0 - alpha_bar(t)); }
    // sigma of the rescaled (signal-normalized) process
    double sigma(double t) const {
        const double ab = alpha_bar(t);
        return std::sqrt((1.0 - ab) / ab);
    }
    double max_sigma() const { return sigma(static_cast<double>(steps_)); }

    static constexpr double kMinAlphaBar = 1e-4;

private:
    int steps_;
};

// z_t = signal(t) * z0 + noise(t) * eps, identically per frame. Plain data
// op: z0 and eps enter training graphs as constants.
template <typename T>
Tensor<T> add_noise(const Tensor<T>& z0, int t, const Tensor<T>& eps, const NoiseSchedule& schedule) {
    if (t < 0 || t >= schedule.step_count()) {
        throw std::invalid_argument("add_noise: t out of [0, T)");
    }
    check_same_shape(z0, eps, "add_noise");
    const T s = static_cast<T>(schedule.signal(t));
    const T n = static_cast<T>(schedule.noise(t));
    Tensor<T> out = Tensor<T>::zeros(z0.shape);
    const std::size_t count = z0.data->size();
    for (std::size_t i = 0; i < count; ++i) {
        (*out.data)[i] = s * (*z0.data)[i] + n * (*eps.data)[i];
    }
    return out;
}

// Mean squared error over the two-frame pair with a fixed normalizer of
// both frames' element count; with reconstruct_source off the source-frame
// terms are dropped from the numerator only. The flag difference is then
// exactly the source frame's contribution to the full loss.
template <typename T>
Tensor<T> diffusion_loss(const Tensor<T>& eps_hat_src, const Tensor<T>& eps_hat_tgt,
                         const Tensor<T>& eps_src, const Tensor<T>& eps_tgt,
                         bool reconstruct_source) {
    check_same_shape(eps_hat_src, eps_src, "diffusion_loss");
    check_same_shape(eps_hat_tgt, eps_tgt, "diffusion_loss");
    const double denom = static_cast<double>(eps_hat_src.numel() + eps_hat_tgt.numel());
    Tensor<T> dt = sub(eps_hat_tgt, eps_tgt.detach());
    Tensor<T> total = sum_all(mul(dt, dt));
    if (reconstruct_source) {
        Tensor<T> ds = sub(eps_hat_src, eps_src.detach());
        total = add(total, sum_all(mul(ds, ds)));
    }
    return scale(total, 1.0 / denom);
}

namespace detail {
template <typename T>
void dense_correspondence(const Correspondence& c, Tensor<T>& target, Tensor<T>& mask) {
    const int n = c.count();
    target = Tensor<T>::zeros({n, n});
    mask = Tensor<T>::zeros({n});
    for (int i = 0; i < n; ++i) {
        if (c.visible[i]) {
            (*mask.data)[i] = T(1);
            (*target.data)[static_cast<std::size_t>(i) * n + c.src_index[i]] = T(1);
        }
    }
}
}  // namespace detail

// Per record: sum_{i,j} m[i] (A[i,j] - C[i,j])^2 normalized by the visible
// row count (max 1), then averaged over records. Correspondences are keyed
// by token stride in pixels.
template <typename T>
Tensor<T> matching_loss(const std::vector<AttentionRecord<T>>& records,
                        const std::map<int, Correspondence>& by_resolution, int image_w) {
    if (records.empty()) return Tensor<T>::zeros({1});
    Tensor<T> acc;
    bool first = true;
    for (const auto& rec : records) {
        const int stride = image_w / rec.w_tokens;
        auto it = by_resolution.find(stride);
        if (it == by_resolution.end() || it->second.h_tokens != rec.h_tokens ||
            it->second.w_tokens != rec.w_tokens) {
            throw std::invalid_argument("matching_loss: no correspondence at token resolution " +
                                        std::to_string(rec.h_tokens) + "x" + std::to_string(rec.w_tokens));
        }
        Tensor<T> target, mask;
        detail::dense_correspondence(it->second, target, mask);
        Tensor<T> term = scale(masked_sqerr_sum(rec.weights, target, mask),
                               1.0 / std::max(1, it->second.visible_count()));
        acc = first ? term : add(acc, term);
        first = false;
    }
    return scale(acc, 1.0 / static_cast<double>(records.size()));
}

struct LossReport {
    double l_diff = 0.0;
    double l_match = 0.0;
    double l_total = 0.0;
    double lambda_match = 1.0;
};

// L = L_diff + lambda * L_match; lambda defaults to 1.0
template <typename T>
Tensor<T> combined_loss(const Tensor<T>& l_diff, const Tensor<T>& l_match, double lambda_match,
                        LossReport* report = nullptr) {
    Tensor<T> total = add(l_diff, scale(l_match, lambda_match));
    if (report) {
        report->l_diff = static_cast<double>((*l_diff.data)[0]);
        report->l_match = static_cast<double>((*l_match.data)[0]);
        report->l_total = static_cast<double>((*total.data)[0]);
        report->lambda_match = lambda_match;
    }
    return total;
}

}  // namespace fpaint
