#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpaint {

inline constexpr std::uint32_t kNoCorrespondence = 0xFFFFFFFFu;

// Sparse row encoding of the binary correspondence matrix C and the row
// visibility mask m at one token resolution: target token i maps to source
// token src_index[i] when visible[i] is set. At most one source per row by
// construction.
struct Correspondence {
    int h_tokens = 0;
    int w_tokens = 0;
    std::vector<std::uint32_t> src_index;  // kNoCorrespondence when not visible
    std::vector<std::uint8_t> visible;     // 0 or 1

    int count() const { return h_tokens * w_tokens; }

    int visible_count() const {
        int n = 0;
        for (auto v : visible) n += v ? 1 : 0;
        return n;
    }

    void validate() const {
        const std::size_t n = static_cast<std::size_t>(count());
        if (src_index.size() != n || visible.size() != n) {
            throw std::runtime_error("Correspondence: row count does not match token grid");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (visible[i] > 1) throw std::runtime_error("Correspondence: visibility flag not 0/1");
            if (visible[i] == 0 && src_index[i] != kNoCorrespondence) {
                throw std::runtime_error("Correspondence: invisible row with a source index");
            }
            if (visible[i] == 1 && src_index[i] >= n) {
                throw std::runtime_error("Correspondence: source index out of range");
            }
        }
    }
};

// corr_res<stride>.bin, magic "FPCR": u32 N, then N little-endian records of
// (u32 src_token_or_0xFFFFFFFF, u8 visible)
void write_correspondence(const std::string& path, const Correspondence& corr);
Correspondence read_correspondence(const std::string& path, int h_tokens, int w_tokens);

}  // namespace fpaint
