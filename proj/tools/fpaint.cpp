// fpaint: interactive image editing with a two-frame denoising model.
// Subcommands cover the full pipeline: synthetic dataset construction,
// training, editing, ablation reports and attention-map visualization.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "fpaint/dataset.hpp"
#include "fpaint/evalkit.hpp"
#include "fpaint/image_io.hpp"
#include "fpaint/sampler.hpp"
#include "fpaint/train.hpp"

namespace fs = std::filesystem;
using namespace fpaint;

namespace {

std::pair<int, int> parse_size(const std::string& s) {
    const std::size_t x = s.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--size", "expected HxW, e.g. 64x64");
    const int h = std::stoi(s.substr(0, x));
    const int w = std::stoi(s.substr(x + 1));
    if (h < 16 || w < 16) throw CLI::ValidationError("--size", "dims must be >= 16");
    return {h, w};
}

EditSignal load_signal_file(const std::string& path, SignalKind expected, int image_h, int image_w) {
    EditSignal signal;
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".pgm") signal.kind = SignalKind::sketch;
    else if (ext == ".ppm") signal.kind = SignalKind::coarse;
    else if (ext == ".txt") signal.kind = SignalKind::drag;
    else throw std::runtime_error("signal file must be .pgm (sketch), .ppm (coarse) or .txt (drag)");
    if (signal.kind != expected) {
        throw std::runtime_error(std::string("signal file type '") + signal_kind_name(signal.kind) +
                                 "' does not match the checkpoint's signal type '" +
                                 signal_kind_name(expected) + "'");
    }
    switch (signal.kind) {
        case SignalKind::sketch: signal.raster = read_pgm(path); break;
        case SignalKind::coarse: signal.raster = read_ppm(path); break;
        case SignalKind::drag:
            signal.drags = parse_drag_points(read_file_bytes(path), image_w, image_h);
            break;
    }
    if (signal.kind != SignalKind::drag &&
        (signal.raster.dim(1) != image_h || signal.raster.dim(2) != image_w)) {
        throw std::runtime_error("signal raster dims do not match the model's image size");
    }
    return signal;
}

int run_gen_data(const std::string& out, int num_pairs, const std::string& size,
                 const std::string& signal, std::uint64_t seed) {
    auto [h, w] = parse_size(size);
    GenDataOptions opt;
    opt.out_dir = out;
    opt.num_pairs = num_pairs;
    opt.seed = seed;
    opt.datagen.width = w;
    opt.datagen.height = h;
    opt.datagen.signal = signal_kind_from_name(signal);
    opt.datagen.filter.tau_hi = w / 4.0;
    generate_dataset(opt);
    std::cout << "wrote " << num_pairs << " pairs under " << out << "\n";
    return 0;
}

int run_train(const std::string& data_dir, const std::string& config_path, const std::string& signal,
              const std::string& ckpt_out, int steps_flag, std::uint64_t seed,
              const std::string& log_path) {
    Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    const SignalKind kind = signal_kind_from_name(signal);

    std::vector<SamplePairData> data = load_dataset(data_dir, cfg.get_int("data.limit"));
    for (const auto& s : data) {
        if (s.signal.kind != kind) {
            throw std::runtime_error("dataset signal kind '" +
                                     std::string(signal_kind_name(s.signal.kind)) +
                                     "' does not match --signal " + signal);
        }
    }

    ModelConfig mc = ModelConfig::from_config(cfg, kind);
    mc.backbone.image_h = data[0].source.dim(1);
    mc.backbone.image_w = data[0].source.dim(2);
    EditModel<float> model(mc, seed);

    TrainOptions opt;
    opt.steps = steps_flag > 0 ? steps_flag : cfg.get_int("train.steps");
    opt.batch = cfg.get_int("train.batch");
    opt.lr = cfg.get_double("train.lr");
    opt.beta1 = cfg.get_double("train.beta1");
    opt.beta2 = cfg.get_double("train.beta2");
    opt.eps = cfg.get_double("train.eps");
    opt.weight_decay = cfg.get_double("train.weight_decay");
    opt.lambda_match = cfg.get_double("train.lambda_match");
    opt.reconstruct_source = cfg.get_bool("train.reconstruct_source");
    opt.seed = seed;
    opt.log_path = log_path;

    train_model(model, data, opt);
    save_model(ckpt_out, model);
    std::cout << "checkpoint written to " << ckpt_out << "\n";
    return 0;
}

int run_edit(const std::string& ckpt, const std::string& source_path, const std::string& signal_file,
             const std::string& out_path, int steps, std::uint64_t seed) {
    auto model = load_model(ckpt);
    Tensor<float> source = read_ppm(source_path);
    const auto& bb = model->config().backbone;
    if (source.dim(1) != bb.image_h || source.dim(2) != bb.image_w) {
        throw std::runtime_error("source image dims do not match the checkpointed model");
    }
    EditSignal signal = load_signal_file(signal_file, model->config().signal, bb.image_h, bb.image_w);
    Tensor<float> edited = euler_sample(*model, source, signal, steps, seed);
    write_ppm(out_path, edited);
    std::cout << "edited image written to " << out_path << "\n";
    return 0;
}

int run_ablate(const std::string& data_dir, const std::string& runs_path, const std::string& out_table,
               const std::string& out_csv, int sample_steps, int eval_limit) {
    // runs file: "label seed checkpoint_path" per line, '#' comments
    std::vector<AblationRun> runs;
    std::istringstream in(read_file_bytes(runs_path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        AblationRun run;
        if (!(ls >> run.label)) continue;
        if (!(ls >> run.seed >> run.checkpoint)) {
            throw std::runtime_error(runs_path + ":" + std::to_string(lineno) +
                                     ": expected 'label seed checkpoint'");
        }
        runs.push_back(run);
    }
    if (runs.empty()) throw std::runtime_error(runs_path + ": no runs listed");

    std::vector<SamplePairData> eval_set = load_dataset(data_dir);
    EvalOptions opt;
    opt.sample_steps = sample_steps;
    opt.limit = eval_limit;
    std::vector<AblationRow> rows = run_ablation(eval_set, runs, opt);

    const std::string table = format_ablation_table(rows);
    std::cout << table;
    if (!out_table.empty()) atomic_write_file(out_table, table);
    if (!out_csv.empty()) atomic_write_file(out_csv, format_ablation_csv(rows));
    return 0;
}

int run_viz_attn(const std::string& ckpt, const std::string& pair_dir, const std::string& layer,
                 const std::vector<std::string>& queries, const std::string& out_prefix,
                 std::uint64_t seed) {
    auto model = load_model(ckpt);
    if (model->config().backbone.attention_mode != AttentionMode::matching) {
        throw std::runtime_error("viz-attn: checkpoint was not trained with matching attention");
    }
    SamplePairData sample = read_pair_dir(pair_dir);
    const auto& bb = model->config().backbone;
    Config defaults;
    auto records = capture_records(*model, sample, defaults.get_int("sample.eval_noise_step"), seed);
    if (records.empty()) throw std::runtime_error("viz-attn: model produced no attention records");

    const AttentionRecord<float>* rec = &records.front();
    if (!layer.empty()) {
        rec = nullptr;
        for (const auto& r : records) {
            if (r.layer_id == layer) {
                rec = &r;
                break;
            }
        }
        if (!rec) {
            std::string known;
            for (const auto& r : records) known += " " + r.layer_id;
            throw std::runtime_error("viz-attn: no layer '" + layer + "'; available:" + known);
        }
    }

    for (const auto& q : queries) {
        const std::size_t comma = q.find(',');
        if (comma == std::string::npos) throw std::runtime_error("--query expects x,y pixel coords");
        const int qx = std::stoi(q.substr(0, comma));
        const int qy = std::stoi(q.substr(comma + 1));
        if (qx < 0 || qx >= bb.image_w || qy < 0 || qy >= bb.image_h) {
            throw std::runtime_error("--query " + q + " outside the image");
        }
        const int sx = bb.image_w / rec->w_tokens;
        const int sy = bb.image_h / rec->h_tokens;
        const int token = (qy / sy) * rec->w_tokens + (qx / sx);
        Heatmap hm = export_attention_heatmap(*rec, token, bb.image_h, bb.image_w);
        const std::string path = out_prefix + "_q" + std::to_string(qx) + "x" + std::to_string(qy) + ".pgm";
        write_pgm_u8(path, hm.pixels, hm.h, hm.w);
        std::cout << "wrote " << path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fpaint: interactive image editing as two-frame video generation"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic pair dataset");
    std::string gen_out, gen_size = "64x64", gen_signal = "sketch";
    int gen_num = 16;
    std::uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--num-pairs", gen_num, "number of pairs")->required();
    gen->add_option("--size", gen_size, "image size HxW (default 64x64)");
    gen->add_option("--signal", gen_signal, "sketch | drag | coarse");
    gen->add_option("--seed", gen_seed, "generation seed");

    // train
    auto* train = app.add_subcommand("train", "train a model on a generated dataset");
    std::string tr_data, tr_config, tr_signal = "sketch", tr_ckpt, tr_log;
    int tr_steps = 0;
    std::uint64_t tr_seed = 0;
    train->add_option("--data", tr_data, "dataset directory")->required();
    train->add_option("--config", tr_config, "config file (key = value)");
    train->add_option("--signal", tr_signal, "sketch | drag | coarse");
    train->add_option("--ckpt-out", tr_ckpt, "checkpoint output path")->required();
    train->add_option("--steps", tr_steps, "override train.steps");
    train->add_option("--seed", tr_seed, "training seed");
    train->add_option("--log", tr_log, "per-step loss log path");

    // edit
    auto* edit = app.add_subcommand("edit", "edit an image with a trained model");
    std::string ed_ckpt, ed_src, ed_signal, ed_out;
    int ed_steps = 25;
    std::uint64_t ed_seed = 0;
    edit->add_option("--ckpt", ed_ckpt, "checkpoint path")->required();
    edit->add_option("--source", ed_src, "source PPM image")->required();
    edit->add_option("--signal-file", ed_signal, "signal: .pgm sketch, .ppm coarse, .txt drag")->required();
    edit->add_option("--out", ed_out, "output PPM path")->required();
    edit->add_option("--steps", ed_steps, "euler sampling steps (default 25)");
    edit->add_option("--seed", ed_seed, "sampling seed");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "evaluate trained checkpoints into a report table");
    std::string ab_data, ab_runs, ab_table, ab_csv;
    int ab_steps = 25, ab_limit = 0;
    ablate->add_option("--data", ab_data, "eval dataset directory")->required();
    ablate->add_option("--runs", ab_runs, "runs file: 'label seed checkpoint' per line")->required();
    ablate->add_option("--out-table", ab_table, "text table output path");
    ablate->add_option("--out-csv", ab_csv, "machine-readable CSV output path");
    ablate->add_option("--sample-steps", ab_steps, "euler steps per evaluation");
    ablate->add_option("--eval-limit", ab_limit, "cap eval pairs (0 = all)");

    // viz-attn
    auto* viz = app.add_subcommand("viz-attn", "export matching-attention heatmaps as PGM");
    std::string vz_ckpt, vz_pair, vz_layer, vz_prefix = "attn";
    std::vector<std::string> vz_queries;
    std::uint64_t vz_seed = 0;
    viz->add_option("--ckpt", vz_ckpt, "checkpoint path")->required();
    viz->add_option("--pair", vz_pair, "pair directory (source/target/signal)")->required();
    viz->add_option("--layer", vz_layer, "attention layer id (default: first record)");
    viz->add_option("--query", vz_queries, "query pixel x,y (repeatable)")->required();
    viz->add_option("--out-prefix", vz_prefix, "output PGM path prefix");
    viz->add_option("--seed", vz_seed, "noise seed for the record pass");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen_data(gen_out, gen_num, gen_size, gen_signal, gen_seed);
        if (train->parsed()) return run_train(tr_data, tr_config, tr_signal, tr_ckpt, tr_steps, tr_seed, tr_log);
        if (edit->parsed()) return run_edit(ed_ckpt, ed_src, ed_signal, ed_out, ed_steps, ed_seed);
        if (ablate->parsed()) return run_ablate(ab_data, ab_runs, ab_table, ab_csv, ab_steps, ab_limit);
        if (viz->parsed()) return run_viz_attn(vz_ckpt, vz_pair, vz_layer, vz_queries, vz_prefix, vz_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
