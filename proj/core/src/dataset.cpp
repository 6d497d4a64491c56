#include "fpaint/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "fpaint/image_io.hpp"

namespace fs = std::filesystem;

namespace fpaint {

std::string pair_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair_%05d", index);
    return buf;
}

std::string format_drag_points(const DragPointSet& points) {
    std::ostringstream os;
    os << "# drag points: sx sy tx ty\n";
    for (const auto& p : points.points) {
        os << p.sx << " " << p.sy << " " << p.tx << " " << p.ty << "\n";
    }
    return os.str();
}

DragPointSet parse_drag_points(const std::string& text, int image_w, int image_h) {
    DragPointSet out;
    out.image_w = image_w;
    out.image_h = image_h;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        DragPoint p;
        if (!(ls >> p.sx)) continue;  // blank line
        if (!(ls >> p.sy >> p.tx >> p.ty)) {
            throw std::runtime_error("drag file line " + std::to_string(lineno) +
                                     ": expected 'sx sy tx ty'");
        }
        std::string extra;
        if (ls >> extra) {
            throw std::runtime_error("drag file line " + std::to_string(lineno) + ": trailing tokens");
        }
        if (p.sx < 0 || p.sx >= image_w || p.sy < 0 || p.sy >= image_h || p.tx < 0 ||
            p.tx >= image_w || p.ty < 0 || p.ty >= image_h) {
            throw std::runtime_error("drag file line " + std::to_string(lineno) +
                                     ": coordinate out of image bounds");
        }
        out.points.push_back(p);
    }
    return out;
}

namespace {

std::map<std::string, std::string> parse_meta(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace

void write_pair_dir(const std::string& dir, const SamplePairData& sample, std::uint64_t seed) {
    fs::create_directories(dir);
    const int h = sample.source.dim(1), w = sample.source.dim(2);
    write_ppm(dir + "/source.ppm", sample.source);
    write_ppm(dir + "/target.ppm", sample.target);

    switch (sample.signal.kind) {
        case SignalKind::sketch:
            write_pgm(dir + "/signal.pgm", sample.signal.raster);
            break;
        case SignalKind::coarse:
            write_ppm(dir + "/signal.ppm", sample.signal.raster);
            break;
        case SignalKind::drag:
            atomic_write_file(dir + "/signal.txt", format_drag_points(sample.signal.drags));
            break;
    }

    std::ostringstream strides;
    bool first = true;
    for (const auto& [stride, corr] : sample.corr) {
        write_correspondence(dir + "/corr_res" + std::to_string(stride) + ".bin", corr);
        if (!first) strides << ",";
        strides << stride;
        first = false;
    }

    std::ostringstream meta;
    meta << "width = " << w << "\n";
    meta << "height = " << h << "\n";
    meta << "signal = " << signal_kind_name(sample.signal.kind) << "\n";
    meta << "strides = " << strides.str() << "\n";
    meta << "seed = " << seed << "\n";
    atomic_write_file(dir + "/meta.txt", meta.str());
}

SamplePairData read_pair_dir(const std::string& dir) {
    auto meta = parse_meta(read_file_bytes(dir + "/meta.txt"));
    const int w = std::stoi(meta.at("width"));
    const int h = std::stoi(meta.at("height"));

    SamplePairData sample;
    sample.source = read_ppm(dir + "/source.ppm");
    sample.target = read_ppm(dir + "/target.ppm");
    if (sample.source.dim(1) != h || sample.source.dim(2) != w) {
        throw std::runtime_error(dir + ": image dims disagree with meta.txt");
    }

    sample.signal.kind = signal_kind_from_name(meta.at("signal"));
    switch (sample.signal.kind) {
        case SignalKind::sketch:
            sample.signal.raster = read_pgm(dir + "/signal.pgm");
            break;
        case SignalKind::coarse:
            sample.signal.raster = read_ppm(dir + "/signal.ppm");
            break;
        case SignalKind::drag:
            sample.signal.drags = parse_drag_points(read_file_bytes(dir + "/signal.txt"), w, h);
            break;
    }

    std::istringstream strides(meta.at("strides"));
    std::string part;
    while (std::getline(strides, part, ',')) {
        if (part.empty()) continue;
        const int s = std::stoi(part);
        Correspondence corr = read_correspondence(dir + "/corr_res" + std::to_string(s) + ".bin",
                                                  h / s, w / s);
        sample.corr[s] = std::move(corr);
    }
    return sample;
}

std::vector<SamplePairData> load_dataset(const std::string& root, int limit) {
    if (!fs::is_directory(root)) throw std::runtime_error("dataset: no such directory " + root);
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("pair_", 0) == 0) {
            dirs.push_back(entry.path().string());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (limit > 0 && static_cast<int>(dirs.size()) > limit) dirs.resize(limit);
    if (dirs.empty()) throw std::runtime_error("dataset: no pair_* directories under " + root);
    std::vector<SamplePairData> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) out.push_back(read_pair_dir(d));
    return out;
}

void generate_dataset(const GenDataOptions& opt) {
    if (opt.num_pairs < 1) throw std::invalid_argument("generate_dataset: num_pairs must be >= 1");
    fs::create_directories(opt.out_dir);
    Rng master(opt.seed);
    for (int i = 0; i < opt.num_pairs; ++i) {
        // one independent stream per pair so generation could shard by index
        const std::uint64_t pair_seed = Rng(opt.seed ^ (0x5851f42d4c957f2dULL * (i + 1))).next_u64();
        SamplePairData sample = generate_pair(opt.datagen, pair_seed);
        write_pair_dir(opt.out_dir + "/" + pair_dir_name(i), sample, pair_seed);
    }
}

}  // namespace fpaint
