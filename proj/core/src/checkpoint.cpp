#include "fpaint/checkpoint.hpp"

#include <cstring>
#include <set>
#include <stdexcept>

#include "fpaint/image_io.hpp"

namespace fpaint {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& s, std::size_t& off) {
    if (off + 4 > s.size()) throw std::runtime_error("checkpoint: truncated");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(s.data()) + off;
    off += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(const std::string& s, std::size_t& off) {
    std::uint32_t bits = get_u32(s, off);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string out = "FPCK";
    put_u32(out, kCheckpointVersion);
    for (const auto& t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.append(t.name);
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        std::size_t numel = 1;
        for (int d : t.shape) {
            put_u32(out, static_cast<std::uint32_t>(d));
            numel *= static_cast<std::size_t>(d);
        }
        if (numel != t.data.size()) throw std::runtime_error("checkpoint: shape/data mismatch for " + t.name);
        for (float v : t.data) put_f32(out, v);
    }
    atomic_write_file(path, out);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < 8 || bytes.compare(0, 4, "FPCK") != 0) {
        throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
    }
    std::size_t off = 4;
    const std::uint32_t version = get_u32(bytes, off);
    if (version != kCheckpointVersion) {
        throw std::runtime_error(path + ": checkpoint format version " + std::to_string(version) +
                                 " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    std::vector<NamedTensor> out;
    while (off < bytes.size()) {
        NamedTensor t;
        const std::uint32_t name_len = get_u32(bytes, off);
        if (off + name_len > bytes.size()) throw std::runtime_error(path + ": truncated name");
        t.name.assign(bytes, off, name_len);
        off += name_len;
        const std::uint32_t ndim = get_u32(bytes, off);
        std::size_t numel = 1;
        for (std::uint32_t i = 0; i < ndim; ++i) {
            const std::uint32_t d = get_u32(bytes, off);
            if (d == 0) throw std::runtime_error(path + ": zero dim in " + t.name);
            t.shape.push_back(static_cast<int>(d));
            numel *= d;
        }
        t.data.reserve(numel);
        for (std::size_t i = 0; i < numel; ++i) t.data.push_back(get_f32(bytes, off));
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<NamedTensor> snapshot_params(const ParamStore<float>& store) {
    std::vector<NamedTensor> out;
    out.reserve(store.size());
    for (const auto& p : store.all()) {
        out.push_back(NamedTensor{p.name, p.value.shape, *p.value.data});
    }
    return out;
}

void restore_params(ParamStore<float>& store, const std::vector<NamedTensor>& tensors,
                    const std::string& ignore_prefix) {
    std::set<std::string> seen;
    for (const auto& t : tensors) {
        if (!ignore_prefix.empty() && t.name.rfind(ignore_prefix, 0) == 0) continue;
        auto& p = store.at(t.name);
        if (p.value.shape != t.shape) {
            throw std::runtime_error("checkpoint: shape mismatch for " + t.name + ": file has " +
                                     shape_str(t.shape) + ", model expects " + shape_str(p.value.shape));
        }
        *p.value.data = t.data;
        seen.insert(t.name);
    }
    for (const auto& p : store.all()) {
        if (!seen.count(p.name)) {
            throw std::runtime_error("checkpoint: missing tensor for param " + p.name);
        }
    }
}

}  // namespace fpaint
