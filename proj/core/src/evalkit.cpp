#include "fpaint/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "fpaint/sampler.hpp"

namespace fpaint {

namespace {

std::vector<double> to_luma(const Tensor<float>& img) {
    const int h = img.dim(1), w = img.dim(2);
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    const float* p = img.ptr();
    if (img.dim(0) == 3) {
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = 0.299 * p[i] + 0.587 * p[plane + i] + 0.114 * p[2 * plane + i];
        }
    } else if (img.dim(0) == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i];
    } else {
        throw std::invalid_argument("ssim: images must have 1 or 3 channels");
    }
    return out;
}

}  // namespace

double ssim(const Tensor<float>& a, const Tensor<float>& b, int window, double c1, double c2) {
    if (a.shape != b.shape || a.ndim() != 3) {
        throw std::invalid_argument("ssim: images must share [C,H,W] dims");
    }
    const int h = a.dim(1), w = a.dim(2);
    if (h < window || w < window) throw std::invalid_argument("ssim: image smaller than window");

    std::vector<double> xa = to_luma(a), xb = to_luma(b);

    // normalized gaussian window, sigma 1.5
    std::vector<double> kernel(static_cast<std::size_t>(window) * window);
    const double sigma = 1.5;
    const int half = window / 2;
    double ksum = 0.0;
    for (int y = 0; y < window; ++y) {
        for (int x = 0; x < window; ++x) {
            const double dy = y - half, dx = x - half;
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>(y) * window + x] = v;
            ksum += v;
        }
    }
    for (auto& v : kernel) v /= ksum;

    double total = 0.0;
    std::int64_t count = 0;
    for (int oy = 0; oy + window <= h; ++oy) {
        for (int ox = 0; ox + window <= w; ++ox) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int y = 0; y < window; ++y) {
                for (int x = 0; x < window; ++x) {
                    const double k = kernel[static_cast<std::size_t>(y) * window + x];
                    const double va = xa[static_cast<std::size_t>(oy + y) * w + ox + x];
                    const double vb = xb[static_cast<std::size_t>(oy + y) * w + ox + x];
                    mu_a += k * va;
                    mu_b += k * vb;
                    aa += k * va * va;
                    bb += k * vb * vb;
                    ab += k * va * vb;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double matching_accuracy(const std::vector<AttentionRecord<float>>& records,
                         const std::map<int, Correspondence>& by_stride, int image_w) {
    double acc_sum = 0.0;
    int counted_records = 0;
    for (const auto& rec : records) {
        const int stride = image_w / rec.w_tokens;
        auto it = by_stride.find(stride);
        if (it == by_stride.end() || it->second.h_tokens != rec.h_tokens ||
            it->second.w_tokens != rec.w_tokens) {
            throw std::invalid_argument("matching_accuracy: no correspondence at record resolution");
        }
        const Correspondence& corr = it->second;
        const int n = corr.count();
        int visible = 0, hits = 0;
        for (int i = 0; i < n; ++i) {
            if (!corr.visible[i]) continue;
            ++visible;
            const float* row = rec.weights.ptr() + static_cast<std::size_t>(i) * n;
            int best = 0;
            for (int j = 1; j < n; ++j) {
                if (row[j] > row[best]) best = j;
            }
            if (static_cast<std::uint32_t>(best) == corr.src_index[i]) ++hits;
        }
        if (visible > 0) {
            acc_sum += static_cast<double>(hits) / visible;
            ++counted_records;
        }
    }
    if (counted_records == 0) return std::numeric_limits<double>::quiet_NaN();
    return acc_sum / counted_records;
}

Heatmap export_attention_heatmap(const AttentionRecord<float>& record, int query_token, int image_h,
                                 int image_w) {
    const int n = record.h_tokens * record.w_tokens;
    if (query_token < 0 || query_token >= record.weights.dim(0)) {
        throw std::invalid_argument("export_attention_heatmap: query token out of range");
    }
    if (record.weights.dim(1) != n) {
        throw std::invalid_argument("export_attention_heatmap: record weights disagree with grid");
    }
    const float* row = record.weights.ptr() + static_cast<std::size_t>(query_token) * n;
    float lo = row[0], hi = row[0];
    for (int j = 1; j < n; ++j) {
        lo = std::min(lo, row[j]);
        hi = std::max(hi, row[j]);
    }
    Heatmap hm;
    hm.h = image_h;
    hm.w = image_w;
    hm.pixels.assign(static_cast<std::size_t>(image_h) * image_w, 0);
    const int sy = image_h / record.h_tokens;
    const int sx = image_w / record.w_tokens;
    if (sy * record.h_tokens != image_h || sx * record.w_tokens != image_w) {
        throw std::invalid_argument("export_attention_heatmap: image dims not divisible by token grid");
    }
    for (int y = 0; y < image_h; ++y) {
        for (int x = 0; x < image_w; ++x) {
            const int j = (y / sy) * record.w_tokens + (x / sx);
            std::uint8_t value = 0;  // degenerate all-equal row maps to 0
            if (hi > lo) {
                value = static_cast<std::uint8_t>(std::lround((row[j] - lo) / (hi - lo) * 255.0));
            }
            hm.pixels[static_cast<std::size_t>(y) * image_w + x] = value;
        }
    }
    return hm;
}

std::vector<AttentionRecord<float>> capture_records(const EditModel<float>& model,
                                                    const SamplePairData& sample, int noise_step,
                                                    std::uint64_t seed) {
    NoGradGuard ng;
    const int f = model.config().backbone.patch_factor;
    Tensor<float> z_src = latent_encode(sample.source, f);
    Tensor<float> z_tgt = latent_encode(sample.target, f);
    Rng rng(seed);
    Tensor<float> eps_s = Tensor<float>::randn(rng, z_src.shape);
    Tensor<float> eps_t = Tensor<float>::randn(rng, z_tgt.shape);
    Tensor<float> noisy_s = add_noise(z_src, noise_step, eps_s, model.schedule());
    Tensor<float> noisy_t = add_noise(z_tgt, noise_step, eps_t, model.schedule());
    Tensor<float> emb = model.embed_source(sample.source);

    ControlFeatures<float> ctrl;
    const ControlFeatures<float>* ctrl_ptr = nullptr;
    const DragPointSet* drags = nullptr;
    if (sample.signal.kind == SignalKind::drag) {
        drags = &sample.signal.drags;
    } else if (model.control()) {
        ctrl = model.control()->encode(sample.signal.raster);
        ctrl_ptr = &ctrl;
    }
    DenoiseOutput<float> out =
        model.denoise(noisy_s, noisy_t, noise_step, z_src, emb, ctrl_ptr, drags);
    return std::move(out.records);
}

double eval_matching_accuracy(const EditModel<float>& model, const std::vector<SamplePairData>& eval_set,
                              const EvalOptions& opt) {
    double sum = 0.0;
    int counted = 0;
    int limit = opt.limit > 0 ? std::min<int>(opt.limit, eval_set.size()) : static_cast<int>(eval_set.size());
    for (int i = 0; i < limit; ++i) {
        const auto& sample = eval_set[i];
        auto records = capture_records(model, sample, opt.eval_noise_step, opt.seed + i);
        const double acc = matching_accuracy(records, sample.corr, sample.source.dim(2));
        if (!std::isnan(acc)) {
            sum += acc;
            ++counted;
        }
    }
    return counted == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / counted;
}

EvalReport evaluate_model(const EditModel<float>& model, const std::vector<SamplePairData>& eval_set,
                          const EvalOptions& opt) {
    EvalReport report;
    int limit = opt.limit > 0 ? std::min<int>(opt.limit, eval_set.size()) : static_cast<int>(eval_set.size());
    for (int i = 0; i < limit; ++i) {
        const auto& sample = eval_set[i];
        const std::uint64_t sample_seed = opt.seed * 1000003ULL + i;
        Tensor<float> edited = euler_sample(model, sample.source, sample.signal, opt.sample_steps,
                                            sample_seed);
        report.per_sample_ssim.push_back(ssim(edited, sample.target));
        report.seeds.push_back(sample_seed);
    }
    double total = 0.0;
    for (double v : report.per_sample_ssim) total += v;
    report.mean_ssim = report.per_sample_ssim.empty() ? 0.0 : total / report.per_sample_ssim.size();
    report.matching_acc = (model.config().backbone.attention_mode == AttentionMode::matching)
                              ? eval_matching_accuracy(model, eval_set, opt)
                              : std::numeric_limits<double>::quiet_NaN();
    std::ostringstream fp;
    fp << attention_mode_name(model.config().backbone.attention_mode) << "/"
       << signal_kind_name(model.config().signal) << "/c" << model.config().backbone.base_channels;
    report.config_fingerprint = fp.str();
    return report;
}

std::vector<AblationRow> run_ablation(const std::vector<SamplePairData>& eval_set,
                                      const std::vector<AblationRun>& runs, const EvalOptions& opt) {
    std::vector<AblationRow> rows;
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (const auto& run : runs) {
        if (!std::filesystem::exists(run.checkpoint)) {
            throw std::runtime_error("run_ablation: missing checkpoint for config '" + run.label +
                                     "' seed " + std::to_string(run.seed) + ": " + run.checkpoint);
        }
        auto model = load_model(run.checkpoint);
        EvalOptions run_opt = opt;
        run_opt.seed = run.seed + 17;
        EvalReport rep = evaluate_model(*model, eval_set, run_opt);
        AblationRow row;
        row.label = run.label;
        row.seed = std::to_string(run.seed);
        row.mean_ssim = rep.mean_ssim;
        row.matching_acc = rep.matching_acc;
        by_label[run.label].push_back(rows.size());
        rows.push_back(row);
    }
    // cross-seed mean per label, in first-appearance order
    std::vector<std::string> label_order;
    for (const auto& run : runs) {
        if (std::find(label_order.begin(), label_order.end(), run.label) == label_order.end()) {
            label_order.push_back(run.label);
        }
    }
    std::vector<AblationRow> means;
    for (const auto& label : label_order) {
        const auto& idx = by_label[label];
        AblationRow mean_row;
        mean_row.label = label;
        mean_row.seed = "mean";
        double s = 0.0, a = 0.0;
        int acc_count = 0;
        for (std::size_t i : idx) {
            s += rows[i].mean_ssim;
            if (!std::isnan(rows[i].matching_acc)) {
                a += rows[i].matching_acc;
                ++acc_count;
            }
        }
        mean_row.mean_ssim = s / idx.size();
        mean_row.matching_acc = acc_count ? a / acc_count : std::numeric_limits<double>::quiet_NaN();
        means.push_back(mean_row);
    }
    rows.insert(rows.end(), means.begin(), means.end());
    return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "config               seed      ssim    match_acc\n";
    os << "---------------------------------------------------\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %-8s %8.4f %10.4f\n", r.label.c_str(), r.seed.c_str(),
                      r.mean_ssim, r.matching_acc);
        os << buf;
    }
    return os.str();
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "config,seed,ssim,match_acc\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g\n", r.label.c_str(), r.seed.c_str(),
                      r.mean_ssim, r.matching_acc);
        os << buf;
    }
    return os.str();
}

std::vector<AblationRow> parse_ablation_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<AblationRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            if (line != "config,seed,ssim,match_acc") {
                throw std::runtime_error("ablation csv: unexpected header '" + line + "'");
            }
            header = false;
            continue;
        }
        std::istringstream ls(line);
        AblationRow row;
        std::string field;
        if (!std::getline(ls, row.label, ',')) throw std::runtime_error("ablation csv: bad row");
        if (!std::getline(ls, row.seed, ',')) throw std::runtime_error("ablation csv: bad row");
        if (!std::getline(ls, field, ',')) throw std::runtime_error("ablation csv: bad row");
        row.mean_ssim = std::stod(field);
        if (!std::getline(ls, field)) throw std::runtime_error("ablation csv: bad row");
        row.matching_acc = std::stod(field);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fpaint
