#pragma once

#include "fpaint/model.hpp"

namespace fpaint {

// Tagged editing signal, whichever of the three kinds a sample carries.
struct EditSignal {
    SignalKind kind = SignalKind::sketch;
    Tensor<float> raster;  // [1,H,W] sketch or [3,H,W] coarse edit
    DragPointSet drags;    // drag kind only
};

// pixel [0,1] image -> centered latent, and back; the space-to-depth part is
// a lossless bijection, centering keeps the diffusion process zero-mean
template <typename T>
Tensor<T> latent_encode(const Tensor<T>& image, int patch_factor) {
    Tensor<T> centered = Tensor<T>::zeros(image.shape);
    for (std::size_t i = 0; i < image.data->size(); ++i) {
        (*centered.data)[i] = T(2) * (*image.data)[i] - T(1);
    }
    return patchify(centered, patch_factor);
}

template <typename T>
Tensor<T> latent_decode(const Tensor<T>& latent, int patch_factor) {
    Tensor<T> img = unpatchify(latent, patch_factor);
    for (auto& v : *img.data) {
        v = std::clamp((v + T(1)) / T(2), T(0), T(1));
    }
    return img;
}

template <typename T>
Tensor<T> convert_tensor(const Tensor<float>& src) {
    Tensor<T> out = Tensor<T>::zeros(src.shape);
    for (std::size_t i = 0; i < src.data->size(); ++i) (*out.data)[i] = static_cast<T>((*src.data)[i]);
    return out;
}

// Deterministic euler integration of the reverse trajectory in the
// sigma-rescaled space: both frames start from terminal noise, the clean
// source latent rides along as channel-concat conditioning at every step,
// and the target frame is decoded at sigma = 0.
inline Tensor<float> euler_sample(const EditModel<float>& model, const Tensor<float>& source_image,
                                  const EditSignal& signal, int steps, std::uint64_t seed,
                                  std::vector<AttentionRecord<float>>* final_records = nullptr) {
    if (steps < 1) throw std::invalid_argument("euler_sample: steps must be >= 1");
    if (signal.kind != model.config().signal) {
        throw std::invalid_argument(std::string("euler_sample: model expects ") +
                                    signal_kind_name(model.config().signal) + " signals, got " +
                                    signal_kind_name(signal.kind));
    }
    NoGradGuard ng;
    const auto& bb = model.config().backbone;
    const NoiseSchedule& sched = model.schedule();
    const int f = bb.patch_factor;

    Tensor<float> src_latent = latent_encode(source_image, f);
    Tensor<float> emb = model.embed_source(source_image);

    ControlFeatures<float> ctrl;
    const ControlFeatures<float>* ctrl_ptr = nullptr;
    const DragPointSet* drags = nullptr;
    if (signal.kind == SignalKind::drag) {
        drags = &signal.drags;
    } else {
        if (!model.control()) throw std::runtime_error("euler_sample: model lacks a control encoder");
        ctrl = model.control()->encode(convert_tensor<float>(signal.raster));
        ctrl_ptr = &ctrl;
    }

    Rng rng(seed);
    const double t_max = static_cast<double>(sched.step_count());
    const double sigma_max = sched.sigma(t_max);
    Tensor<float> xbar_s = Tensor<float>::randn(rng, src_latent.shape, sigma_max);
    Tensor<float> xbar_t = Tensor<float>::randn(rng, src_latent.shape, sigma_max);

    auto axpy = [](Tensor<float>& y, double a, const Tensor<float>& x) {
        for (std::size_t i = 0; i < y.data->size(); ++i) {
            (*y.data)[i] += static_cast<float>(a) * (*x.data)[i];
        }
    };

    for (int k = 0; k < steps; ++k) {
        const double t_k = t_max * (1.0 - static_cast<double>(k) / steps);
        const double t_next = t_max * (1.0 - static_cast<double>(k + 1) / steps);
        const double sig_k = sched.sigma(t_k);
        const double sig_next = (k + 1 == steps) ? 0.0 : sched.sigma(t_next);
        const double root_ab = std::sqrt(sched.alpha_bar(t_k));

        Tensor<float> zs = Tensor<float>::zeros(xbar_s.shape);
        Tensor<float> zt = Tensor<float>::zeros(xbar_t.shape);
        for (std::size_t i = 0; i < zs.data->size(); ++i) {
            (*zs.data)[i] = static_cast<float>(root_ab) * (*xbar_s.data)[i];
            (*zt.data)[i] = static_cast<float>(root_ab) * (*xbar_t.data)[i];
        }
        DenoiseOutput<float> out = model.denoise(zs, zt, t_k, src_latent, emb, ctrl_ptr, drags);
        axpy(xbar_s, sig_next - sig_k, out.eps_src);
        axpy(xbar_t, sig_next - sig_k, out.eps_tgt);
        if (final_records && k + 1 == steps) *final_records = std::move(out.records);
    }

    Tensor<float> result = latent_decode(xbar_t, f);
    ensure_finite(result, "euler_sample output");
    return result;
}

}  // namespace fpaint
