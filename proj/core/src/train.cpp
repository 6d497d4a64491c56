#include "fpaint/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fpaint/sampler.hpp"

namespace fpaint {

AdamW::AdamW(ParamStore<float>& store, const TrainOptions& opt) : store_(store), opt_(opt) {
    m_.reserve(store.size());
    v_.reserve(store.size());
    for (const auto& p : store.all()) {
        m_.emplace_back(p.value.data->size(), 0.f);
        v_.emplace_back(p.value.data->size(), 0.f);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, t_);
    const double bc2 = 1.0 - std::pow(opt_.beta2, t_);
    auto& params = store_.all();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& value = *params[pi].value.data;
        const auto& grad = *params[pi].value.grad;
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = static_cast<float>(opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g);
            v[i] = static_cast<float>(opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g);
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            const double update = mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * value[i];
            value[i] = static_cast<float>(value[i] - opt_.lr * update);
        }
    }
}

TrainResult train_model(EditModel<float>& model, const std::vector<SamplePairData>& data,
                        const TrainOptions& opt) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    const auto& bb = model.config().backbone;
    for (const auto& sample : data) {
        if (sample.signal.kind != model.config().signal) {
            throw std::invalid_argument("train: dataset signal kind does not match the model");
        }
        if (sample.source.dim(1) != bb.image_h || sample.source.dim(2) != bb.image_w) {
            throw std::invalid_argument("train: dataset image dims do not match the model");
        }
    }

    std::ofstream log;
    if (!opt.log_path.empty()) {
        log.open(opt.log_path, std::ios::trunc);
        if (!log) throw std::runtime_error("train: cannot open log " + opt.log_path);
        log << "# training loss log\n";
        log << "# lambda_match = " << opt.lambda_match << "\n";
        log << "# columns: step l_diff l_match l_total\n";
    }

    const int f = bb.patch_factor;
    const int t_count = model.schedule().step_count();
    Rng rng(opt.seed == 0 ? 0x6f1db87a3c11ULL : opt.seed);
    AdamW optimizer(model.params(), opt);
    TrainResult result;
    result.per_step.reserve(opt.steps);

    // latents are fixed per sample; encode once
    std::vector<Tensor<float>> z_src(data.size()), z_tgt(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        z_src[i] = latent_encode(data[i].source, f);
        z_tgt[i] = latent_encode(data[i].target, f);
    }

    const bool matching = bb.attention_mode == AttentionMode::matching;
    for (int step = 0; step < opt.steps; ++step) {
        model.params().zero_grad();
        Tensor<float> batch_loss;
        LossReport step_report;
        step_report.lambda_match = opt.lambda_match;

        for (int b = 0; b < opt.batch; ++b) {
            const std::size_t si = rng.below(data.size());
            const auto& sample = data[si];
            const int t = 1 + rng.below_int(t_count - 1);
            Tensor<float> eps_s = Tensor<float>::randn(rng, z_src[si].shape);
            Tensor<float> eps_t = Tensor<float>::randn(rng, z_tgt[si].shape);
            Tensor<float> noisy_s = add_noise(z_src[si], t, eps_s, model.schedule());
            Tensor<float> noisy_t = add_noise(z_tgt[si], t, eps_t, model.schedule());
            Tensor<float> emb = model.embed_source(sample.source);

            ControlFeatures<float> ctrl;
            const ControlFeatures<float>* ctrl_ptr = nullptr;
            const DragPointSet* drags = nullptr;
            if (sample.signal.kind == SignalKind::drag) {
                drags = &sample.signal.drags;
            } else {
                ctrl = model.control()->encode(sample.signal.raster);
                ctrl_ptr = &ctrl;
            }

            DenoiseOutput<float> out =
                model.denoise(noisy_s, noisy_t, t, z_src[si], emb, ctrl_ptr, drags);
            Tensor<float> l_diff = diffusion_loss(out.eps_src, out.eps_tgt, eps_s, eps_t,
                                                  opt.reconstruct_source);
            Tensor<float> l_match = matching ? matching_loss(out.records, sample.corr, bb.image_w)
                                             : Tensor<float>::zeros({1});
            LossReport rep;
            Tensor<float> total = combined_loss(l_diff, l_match, opt.lambda_match, &rep);
            step_report.l_diff += rep.l_diff / opt.batch;
            step_report.l_match += rep.l_match / opt.batch;
            step_report.l_total += rep.l_total / opt.batch;
            batch_loss = (b == 0) ? total : add(batch_loss, total);
        }

        Tensor<float> loss = scale(batch_loss, 1.0 / opt.batch);
        backward(loss);
        optimizer.step();
        result.per_step.push_back(step_report);
        if (log.is_open()) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%d %.8g %.8g %.8g\n", step, step_report.l_diff,
                          step_report.l_match, step_report.l_total);
            log << buf;
        }
    }
    return result;
}

}  // namespace fpaint
