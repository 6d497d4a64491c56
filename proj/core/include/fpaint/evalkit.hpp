#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fpaint/dataset.hpp"
#include "fpaint/model.hpp"

namespace fpaint {

// Gaussian-windowed SSIM (11x11, sigma 1.5) on luma, unit dynamic range
// constants C1 = 0.01^2, C2 = 0.03^2; mean over fully-interior windows.
double ssim(const Tensor<float>& a, const Tensor<float>& b, int window = 11, double c1 = 1e-4,
            double c2 = 9e-4);

// fraction of visible target tokens whose attention-row argmax lands on the
// correspondence-designated source token, averaged over records; NaN when no
// record has a visible token
double matching_accuracy(const std::vector<AttentionRecord<float>>& records,
                         const std::map<int, Correspondence>& by_stride, int image_w);

struct Heatmap {
    int h = 0, w = 0;
    std::vector<std::uint8_t> pixels;
};

// one attention row reshaped to the source token grid, min-max normalized
// (an all-equal row maps to 0), nearest-neighbor upsampled to image size
Heatmap export_attention_heatmap(const AttentionRecord<float>& record, int query_token, int image_h,
                                 int image_w);

struct EvalReport {
    std::vector<double> per_sample_ssim;
    double mean_ssim = 0.0;
    double matching_acc = std::numeric_limits<double>::quiet_NaN();
    std::string config_fingerprint;
    std::vector<std::uint64_t> seeds;
};

struct EvalOptions {
    int sample_steps = 25;
    int eval_noise_step = 100;  // fixed low-noise level for attention records
    std::uint64_t seed = 1;
    int limit = 0;  // 0 = whole eval set
};

// records captured from one denoise pass at a fixed noise level
std::vector<AttentionRecord<float>> capture_records(const EditModel<float>& model,
                                                    const SamplePairData& sample, int noise_step,
                                                    std::uint64_t seed);

double eval_matching_accuracy(const EditModel<float>& model, const std::vector<SamplePairData>& eval_set,
                              const EvalOptions& opt);

EvalReport evaluate_model(const EditModel<float>& model, const std::vector<SamplePairData>& eval_set,
                          const EvalOptions& opt);

// ---------------------------------------------------------------------------
// ablation harness
// ---------------------------------------------------------------------------

struct AblationRun {
    std::string label;          // groups seeds of one configuration
    std::uint64_t seed = 0;     // training seed of the checkpoint
    std::string checkpoint;     // path
};

struct AblationRow {
    std::string label;
    std::string seed;  // per-seed rows carry the number, summary rows "mean"
    double mean_ssim = 0.0;
    double matching_acc = 0.0;
};

// evaluates every (label, seed) checkpoint on the shared eval set, then adds
// one cross-seed mean row per label; a missing checkpoint fails naming the
// run
std::vector<AblationRow> run_ablation(const std::vector<SamplePairData>& eval_set,
                                      const std::vector<AblationRun>& runs, const EvalOptions& opt);

std::string format_ablation_table(const std::vector<AblationRow>& rows);
std::string format_ablation_csv(const std::vector<AblationRow>& rows);
std::vector<AblationRow> parse_ablation_csv(const std::string& text);

}  // namespace fpaint
