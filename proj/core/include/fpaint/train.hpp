#pragma once

#include <string>
#include <vector>

#include "fpaint/dataset.hpp"
#include "fpaint/diffusion.hpp"
#include "fpaint/model.hpp"

namespace fpaint {

struct TrainOptions {
    int steps = 2000;
    int batch = 2;
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    double lambda_match = 1.0;
    bool reconstruct_source = true;
    std::uint64_t seed = 0;
    std::string log_path;  // optional per-step loss log
};

struct TrainResult {
    std::vector<LossReport> per_step;
};

// Adam with decoupled weight decay over every registered parameter.
class AdamW {
public:
    AdamW(ParamStore<float>& store, const TrainOptions& opt);
    void step();

private:
    ParamStore<float>& store_;
    TrainOptions opt_;
    int t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

TrainResult train_model(EditModel<float>& model, const std::vector<SamplePairData>& data,
                        const TrainOptions& opt);

}  // namespace fpaint
