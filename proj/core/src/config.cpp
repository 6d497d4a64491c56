#include "fpaint/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fpaint {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config::Config() {
    auto def = [&](const char* key, const char* value, const char* doc) {
        entries_[key] = ConfigEntry{value, doc};
    };
    // data
    def("data.limit", "0", "cap on training pairs loaded from the dataset dir; 0 = all");
    def("data.eval_limit", "0", "cap on eval pairs; 0 = all");
    // model; defaults target CPU-minutes training at 64x64. Larger
    // resolutions (e.g. 576x1024) are structurally supported but far outside
    // the desk-scale budget.
    def("model.base_channels", "32", "channels at the finest level");
    def("model.channel_mult", "1,2,4", "per-level channel multipliers, finest first");
    def("model.attention_levels", "1,2", "level indices carrying attention blocks");
    def("model.head_count", "4", "attention heads; must divide every attention dim");
    def("model.attention_mode", "matching", "temporal | crossframe | matching");
    def("model.patch_factor", "4", "space-to-depth factor of the latent stand-in");
    def("model.embed_dim", "64", "source-image embedding token width");
    def("model.noise_emb_dim", "64", "noise-level embedding width");
    def("model.diffusion_steps", "1000", "training discretization T of the noise schedule");
    // train
    def("train.steps", "2000", "optimizer steps");
    def("train.batch", "2", "samples accumulated per step");
    def("train.lr", "2e-3", "AdamW learning rate");
    def("train.beta1", "0.9", "AdamW beta1");
    def("train.beta2", "0.999", "AdamW beta2");
    def("train.eps", "1e-8", "AdamW epsilon");
    def("train.weight_decay", "0.0", "decoupled weight decay");
    def("train.lambda_match", "1.0", "matching-loss weight");
    def("train.reconstruct_source", "true", "include the source frame in the diffusion loss");
    // sample
    def("sample.steps", "25", "euler sampling steps");
    def("sample.eval_noise_step", "100", "fixed noise level for matching-accuracy evaluation");
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    load_text(os.str(), path);
}

void Config::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        it->second.value = value;
    }
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw std::runtime_error("config: unknown key '" + key + "'");
    it->second.value = value;
}

const std::string& Config::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw std::runtime_error("config: unknown key '" + key + "'");
    return it->second.value;
}

int Config::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const std::invalid_argument&) {
        throw std::runtime_error("config: key '" + key + "' is not an integer: " + get(key));
    }
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        throw std::runtime_error("config: key '" + key + "' is not a number: " + get(key));
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: key '" + key + "' is not a boolean: " + v);
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<int> out;
    std::istringstream in(v);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        out.push_back(std::stoi(part));
    }
    if (out.empty()) throw std::runtime_error("config: key '" + key + "' is an empty list");
    return out;
}

std::string Config::dump() const {
    std::ostringstream os;
    for (const auto& [key, entry] : entries_) {
        os << key << " = " << entry.value << "\n";
    }
    return os.str();
}

}  // namespace fpaint
