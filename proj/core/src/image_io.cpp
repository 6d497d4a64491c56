#include "fpaint/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fpaint {

namespace {

std::uint8_t to_byte(float v) {
    float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

// reads one whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

struct PnmHeader {
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    std::size_t data_offset = 0;
};

PnmHeader parse_header(const std::string& bytes, const std::string& path) {
    std::istringstream in(bytes);
    PnmHeader hd;
    hd.magic = next_token(in);
    hd.w = std::stoi(next_token(in));
    hd.h = std::stoi(next_token(in));
    hd.maxval = std::stoi(next_token(in));
    if (hd.w <= 0 || hd.h <= 0 || hd.maxval != 255) {
        throw std::runtime_error(path + ": unsupported PNM header");
    }
    hd.data_offset = static_cast<std::size_t>(in.tellg());
    return hd;
}

}  // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("rename failed: " + path);
    }
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_ppm(const std::string& path, const Tensor<float>& image) {
    if (image.ndim() != 3 || image.dim(0) != 3) {
        throw std::invalid_argument("write_ppm: need [3,H,W], got " + shape_str(image.shape));
    }
    const int h = image.dim(1), w = image.dim(2);
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(3) * h * w);
    const float* p = image.ptr();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.push_back(static_cast<char>(to_byte(p[(static_cast<std::size_t>(c) * h + y) * w + x])));
            }
        }
    }
    atomic_write_file(path, out);
}

Tensor<float> read_ppm(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    PnmHeader hd = parse_header(bytes, path);
    if (hd.magic != "P6") throw std::runtime_error(path + ": not a P6 PPM");
    const std::size_t need = hd.data_offset + static_cast<std::size_t>(3) * hd.w * hd.h;
    if (bytes.size() < need) throw std::runtime_error(path + ": truncated PPM");
    Tensor<float> img = Tensor<float>::zeros({3, hd.h, hd.w});
    float* p = img.ptr();
    const unsigned char* src = reinterpret_cast<const unsigned char*>(bytes.data()) + hd.data_offset;
    for (int y = 0; y < hd.h; ++y) {
        for (int x = 0; x < hd.w; ++x) {
            for (int c = 0; c < 3; ++c) {
                p[(static_cast<std::size_t>(c) * hd.h + y) * hd.w + x] =
                    static_cast<float>(src[(static_cast<std::size_t>(y) * hd.w + x) * 3 + c]) / 255.0f;
            }
        }
    }
    return img;
}

void write_pgm(const std::string& path, const Tensor<float>& image) {
    if (image.ndim() != 3 || image.dim(0) != 1) {
        throw std::invalid_argument("write_pgm: need [1,H,W], got " + shape_str(image.shape));
    }
    const int h = image.dim(1), w = image.dim(2);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * w);
    const float* p = image.ptr();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(p[i]);
    write_pgm_u8(path, px, h, w);
}

void write_pgm_u8(const std::string& path, const std::vector<std::uint8_t>& pixels, int h, int w) {
    if (pixels.size() != static_cast<std::size_t>(h) * w) {
        throw std::invalid_argument("write_pgm_u8: pixel count mismatch");
    }
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    atomic_write_file(path, out);
}

Tensor<float> read_pgm(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    PnmHeader hd = parse_header(bytes, path);
    if (hd.magic != "P5") throw std::runtime_error(path + ": not a P5 PGM");
    const std::size_t need = hd.data_offset + static_cast<std::size_t>(hd.w) * hd.h;
    if (bytes.size() < need) throw std::runtime_error(path + ": truncated PGM");
    Tensor<float> img = Tensor<float>::zeros({1, hd.h, hd.w});
    float* p = img.ptr();
    const unsigned char* src = reinterpret_cast<const unsigned char*>(bytes.data()) + hd.data_offset;
    for (std::size_t i = 0; i < static_cast<std::size_t>(hd.w) * hd.h; ++i) {
        p[i] = static_cast<float>(src[i]) / 255.0f;
    }
    return img;
}

}  // namespace fpaint
