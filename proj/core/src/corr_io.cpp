#include "fpaint/correspondence.hpp"

#include <cstring>

#include "fpaint/image_io.hpp"

namespace fpaint {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(s.data()) + off;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_correspondence(const std::string& path, const Correspondence& corr) {
    corr.validate();
    std::string out = "FPCR";
    const std::uint32_t n = static_cast<std::uint32_t>(corr.count());
    put_u32(out, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        put_u32(out, corr.src_index[i]);
        out.push_back(static_cast<char>(corr.visible[i]));
    }
    atomic_write_file(path, out);
}

Correspondence read_correspondence(const std::string& path, int h_tokens, int w_tokens) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < 8 || bytes.compare(0, 4, "FPCR") != 0) {
        throw std::runtime_error(path + ": bad correspondence magic");
    }
    const std::uint32_t n = get_u32(bytes, 4);
    if (n != static_cast<std::uint32_t>(h_tokens) * static_cast<std::uint32_t>(w_tokens)) {
        throw std::runtime_error(path + ": token count does not match expected grid");
    }
    if (bytes.size() != 8 + static_cast<std::size_t>(n) * 5) {
        throw std::runtime_error(path + ": truncated correspondence file");
    }
    Correspondence corr;
    corr.h_tokens = h_tokens;
    corr.w_tokens = w_tokens;
    corr.src_index.resize(n);
    corr.visible.resize(n);
    std::size_t off = 8;
    for (std::uint32_t i = 0; i < n; ++i) {
        corr.src_index[i] = get_u32(bytes, off);
        corr.visible[i] = static_cast<std::uint8_t>(bytes[off + 4]);
        off += 5;
    }
    corr.validate();
    return corr;
}

}  // namespace fpaint
