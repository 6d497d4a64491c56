#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "fpaint/evalkit.hpp"
#include "fpaint/sampler.hpp"
#include "fpaint/image_io.hpp"
#include "fpaint/train.hpp"

namespace fs = std::filesystem;
using namespace fpaint;

namespace {

ModelConfig small_config(SignalKind kind) {
    ModelConfig cfg;
    cfg.signal = kind;
    cfg.diffusion_steps = 200;
    cfg.backbone.image_h = 32;
    cfg.backbone.image_w = 32;
    cfg.backbone.patch_factor = 4;
    cfg.backbone.base_channels = 8;
    cfg.backbone.channel_mult = {1, 2};
    cfg.backbone.attention_levels = {1};
    cfg.backbone.head_count = 2;
    cfg.backbone.attention_mode = AttentionMode::matching;
    cfg.backbone.embed_dim = 16;
    cfg.backbone.noise_emb_dim = 16;
    return cfg;
}

std::vector<SamplePairData> small_dataset(int n, SignalKind kind, std::uint64_t seed) {
    DatagenOptions opt;
    opt.width = 32;
    opt.height = 32;
    opt.signal = kind;
    opt.filter.tau_hi = 8.0;
    opt.corr_strides = {8};
    std::vector<SamplePairData> out;
    for (int i = 0; i < n; ++i) out.push_back(generate_pair(opt, seed + i));
    return out;
}

}  // namespace

TEST_CASE("euler_sample is deterministic and in range, down to a single step") {
    ModelConfig cfg = small_config(SignalKind::sketch);
    EditModel<float> model(cfg, 5);
    Tensor<float> img = Tensor<float>::zeros({3, 32, 32});
    Rng rng(6);
    for (auto& v : *img.data) v = static_cast<float>(rng.uniform());
    EditSignal signal;
    signal.kind = SignalKind::sketch;
    signal.raster = Tensor<float>::zeros({1, 32, 32});

    Tensor<float> a = euler_sample(model, img, signal, 5, 123);
    Tensor<float> b = euler_sample(model, img, signal, 5, 123);
    CHECK(*a.data == *b.data);
    CHECK(a.shape == std::vector<int>{3, 32, 32});
    for (float v : *a.data) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
    }
    CHECK(a.all_finite());

    Tensor<float> one_step = euler_sample(model, img, signal, 1, 9);
    CHECK(one_step.all_finite());

    Tensor<float> c = euler_sample(model, img, signal, 5, 124);
    CHECK(*a.data != *c.data);  // seed matters

    CHECK_THROWS(euler_sample(model, img, signal, 0, 1));
    EditSignal wrong;
    wrong.kind = SignalKind::drag;
    wrong.drags.image_w = 32;
    wrong.drags.image_h = 32;
    CHECK_THROWS(euler_sample(model, img, wrong, 5, 1));
}

TEST_CASE("training reduces the loss on a tiny run and logs exactly K lines") {
    auto data = small_dataset(6, SignalKind::sketch, 100);
    ModelConfig cfg = small_config(SignalKind::sketch);
    EditModel<float> model(cfg, 7);

    const std::string log_path =
        (fs::temp_directory_path() / "fpaint_train_log_test.txt").string();
    TrainOptions opt;
    opt.steps = 40;
    opt.batch = 1;
    opt.lr = 2e-3;
    opt.lambda_match = 1.0;
    opt.seed = 3;
    opt.log_path = log_path;
    TrainResult result = train_model(model, data, opt);
    REQUIRE(static_cast<int>(result.per_step.size()) == opt.steps);

    double first = 0, last = 0;
    const int tail = opt.steps / 10;
    for (int i = 0; i < tail; ++i) {
        first += result.per_step[i].l_total;
        last += result.per_step[opt.steps - 1 - i].l_total;
    }
    CHECK(last < first);

    // log: K data lines after the '#' header, lambda_match in the header
    std::istringstream in(read_file_bytes(log_path));
    std::string line;
    int data_lines = 0;
    bool lambda_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) {
            if (line.find("lambda_match = 1") != std::string::npos) lambda_seen = true;
            continue;
        }
        ++data_lines;
    }
    CHECK(data_lines == opt.steps);
    CHECK(lambda_seen);
    fs::remove(log_path);
}

TEST_CASE("training is deterministic given the seed") {
    auto data = small_dataset(3, SignalKind::sketch, 50);
    auto run = [&] {
        ModelConfig cfg = small_config(SignalKind::sketch);
        EditModel<float> model(cfg, 7);
        TrainOptions opt;
        opt.steps = 5;
        opt.batch = 2;
        opt.seed = 9;
        train_model(model, data, opt);
        return snapshot_params(model.params());
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].data == b[i].data);
    }
}

TEST_CASE("model save/load reproduces parameters bit-exactly and samples identically") {
    auto data = small_dataset(2, SignalKind::sketch, 200);
    ModelConfig cfg = small_config(SignalKind::sketch);
    EditModel<float> model(cfg, 17);
    TrainOptions opt;
    opt.steps = 3;
    opt.batch = 1;
    opt.seed = 21;
    train_model(model, data, opt);

    const std::string path = (fs::temp_directory_path() / "fpaint_model_test.fpck").string();
    save_model(path, model);
    auto loaded = load_model(path);
    CHECK(loaded->config().signal == SignalKind::sketch);
    CHECK(loaded->config().backbone.attention_mode == AttentionMode::matching);
    for (const auto& p : model.params().all()) {
        CHECK(*loaded->params().at(p.name).value.data == *p.value.data);
    }
    Tensor<float> out_a = euler_sample(model, data[0].source, data[0].signal, 4, 31);
    Tensor<float> out_b = euler_sample(*loaded, data[0].source, data[0].signal, 4, 31);
    CHECK(*out_a.data == *out_b.data);
    fs::remove(path);
}

TEST_CASE("trainer rejects signal mismatches") {
    auto data = small_dataset(2, SignalKind::sketch, 300);
    ModelConfig cfg = small_config(SignalKind::coarse);
    EditModel<float> model(cfg, 1);
    TrainOptions opt;
    opt.steps = 1;
    CHECK_THROWS(train_model(model, data, opt));
}

TEST_CASE("capture_records produces one record per matching site with row sums 1") {
    auto data = small_dataset(1, SignalKind::sketch, 400);
    ModelConfig cfg = small_config(SignalKind::sketch);
    EditModel<float> model(cfg, 23);
    auto records = capture_records(model, data[0], 20, 7);
    CHECK(records.size() == 3);  // enc1, mid, dec1
    for (const auto& rec : records) {
        const int n = rec.h_tokens * rec.w_tokens;
        for (int i = 0; i < n; ++i) {
            float sum = 0;
            for (int j = 0; j < n; ++j) sum += (*rec.weights.data)[i * n + j];
            CHECK(sum == doctest::Approx(1.f).epsilon(1e-4));
        }
    }
}
