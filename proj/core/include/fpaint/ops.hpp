#pragma once

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "fpaint/tensor.hpp"

// Primitive op set for the gradient engine. Each op validates shapes up
// front (naming itself in the error), computes the forward value and, when
// tracking is on, attaches a backward closure. There is no broadcasting
// beyond scalar*tensor and bias-add; callers reshape explicitly.

namespace fpaint {

namespace detail {

// c[m,n] (+)= a[m,k] * b[k,n]
template <typename T>
void raw_matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(T) * static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        T* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T(0)) continue;
            const T* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c[m,n] (+)= a[m,k] * b[n,k]^T
template <typename T>
void raw_matmul_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        T* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<std::size_t>(j) * k;
            T acc = accumulate ? crow[j] : T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

// c[k,n] (+)= a[m,k]^T * b[m,n]
template <typename T>
void raw_matmul_at(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(T) * static_cast<std::size_t>(k) * n);
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        const T* brow = b + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T(0)) continue;
            T* crow = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    Tensor<T> out = Tensor<T>::zeros(a.shape);
    const std::size_t n = a.data->size();
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
    attach_node(out, {a, b}, [](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        const std::size_t nn = o.grad->size();
        if (pa.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pa.grad)[i] += (*o.grad)[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pb.grad)[i] += (*o.grad)[i];
    });
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "sub");
    Tensor<T> out = Tensor<T>::zeros(a.shape);
    const std::size_t n = a.data->size();
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] - (*b.data)[i];
    attach_node(out, {a, b}, [](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        const std::size_t nn = o.grad->size();
        if (pa.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pa.grad)[i] += (*o.grad)[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pb.grad)[i] -= (*o.grad)[i];
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out = Tensor<T>::zeros(a.shape);
    const std::size_t n = a.data->size();
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
    attach_node(out, {a, b}, [](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        const std::size_t nn = o.grad->size();
        if (pa.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pa.grad)[i] += (*o.grad)[i] * (*pb.data)[i];
        if (pb.requires_grad)
            for (std::size_t i = 0; i < nn; ++i) (*pb.grad)[i] += (*o.grad)[i] * (*pa.data)[i];
    });
    return out;
}

// compile-time constant factor
template <typename T>
Tensor<T> scale(const Tensor<T>& a, double c) {
    Tensor<T> out = Tensor<T>::zeros(a.shape);
    const std::size_t n = a.data->size();
    const T cc = static_cast<T>(c);
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * cc;
    attach_node(out, {a}, [cc](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        if (!pa.requires_grad) return;
        const std::size_t nn = o.grad->size();
        for (std::size_t i = 0; i < nn; ++i) (*pa.grad)[i] += (*o.grad)[i] * cc;
    });
    return out;
}

// learnable scalar [1] times tensor
template <typename T>
Tensor<T> smul(const Tensor<T>& s, const Tensor<T>& x) {
    if (s.numel() != 1) throw std::invalid_argument("smul: scale must be a scalar tensor");
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    const T sv = (*s.data)[0];
    const std::size_t n = x.data->size();
    for (std::size_t i = 0; i < n; ++i) (*out.data)[i] = sv * (*x.data)[i];
    attach_node(out, {s, x}, [](const Tensor<T>& o) {
        const auto& ps = o.node->parents[0];
        const auto& px = o.node->parents[1];
        const std::size_t nn = o.grad->size();
        if (ps.requires_grad) {
            T acc = T(0);
            for (std::size_t i = 0; i < nn; ++i) acc += (*o.grad)[i] * (*px.data)[i];
            (*ps.grad)[0] += acc;
        }
        if (px.requires_grad) {
            const T sv = (*ps.data)[0];
            for (std::size_t i = 0; i < nn; ++i) (*px.grad)[i] += sv * (*o.grad)[i];
        }
    });
    return out;
}

// x [m,n] + b [n], broadcast over rows
template <typename T>
Tensor<T> bias_add_rows(const Tensor<T>& x, const Tensor<T>& b) {
    if (x.ndim() != 2 || b.ndim() != 1 || x.dim(1) != b.dim(0)) {
        throw std::invalid_argument("bias_add_rows: need x[m,n] and b[n], got " + shape_str(x.shape) +
                                    " and " + shape_str(b.shape));
    }
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            (*out.data)[static_cast<std::size_t>(i) * n + j] =
                (*x.data)[static_cast<std::size_t>(i) * n + j] + (*b.data)[j];
    attach_node(out, {x, b}, [m, n](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        if (px.requires_grad) {
            const std::size_t nn = o.grad->size();
            for (std::size_t i = 0; i < nn; ++i) (*px.grad)[i] += (*o.grad)[i];
        }
        if (pb.requires_grad) {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    (*pb.grad)[j] += (*o.grad)[static_cast<std::size_t>(i) * n + j];
        }
    });
    return out;
}

// x [C,H,W] + b [C], broadcast over spatial positions
template <typename T>
Tensor<T> bias_add_channels(const Tensor<T>& x, const Tensor<T>& b) {
    if (x.ndim() != 3 || b.ndim() != 1 || x.dim(0) != b.dim(0)) {
        throw std::invalid_argument("bias_add_channels: need x[C,H,W] and b[C], got " +
                                    shape_str(x.shape) + " and " + shape_str(b.shape));
    }
    const int c = x.dim(0);
    const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    for (int ch = 0; ch < c; ++ch) {
        const T bv = (*b.data)[ch];
        for (std::size_t i = 0; i < hw; ++i)
            (*out.data)[ch * hw + i] = (*x.data)[ch * hw + i] + bv;
    }
    attach_node(out, {x, b}, [c, hw](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        if (px.requires_grad) {
            const std::size_t nn = o.grad->size();
            for (std::size_t i = 0; i < nn; ++i) (*px.grad)[i] += (*o.grad)[i];
        }
        if (pb.requires_grad) {
            for (int ch = 0; ch < c; ++ch) {
                T acc = T(0);
                for (std::size_t i = 0; i < hw; ++i) acc += (*o.grad)[ch * hw + i];
                (*pb.grad)[ch] += acc;
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape) + " x " +
                                    shape_str(b.shape));
    }
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> out = Tensor<T>::zeros({m, n});
    detail::raw_matmul(a.ptr(), b.ptr(), out.ptr(), m, k, n, false);
    attach_node(out, {a, b}, [m, k, n](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        const auto& pb = o.node->parents[1];
        if (pa.requires_grad) detail::raw_matmul_bt(o.grad->data(), pb.ptr(), pa.grad->data(), m, n, k, true);
        if (pb.requires_grad) detail::raw_matmul_at(pa.ptr(), o.grad->data(), pb.grad->data(), m, k, n, true);
    });
    return out;
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& x) {
    if (x.ndim() != 2) throw std::invalid_argument("transpose2d: need 2-D input, got " + shape_str(x.shape));
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            (*out.data)[static_cast<std::size_t>(j) * m + i] = (*x.data)[static_cast<std::size_t>(i) * n + j];
    attach_node(out, {x}, [m, n](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                (*px.grad)[static_cast<std::size_t>(i) * n + j] += (*o.grad)[static_cast<std::size_t>(j) * m + i];
    });
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> new_shape) {
    if (shape_numel(new_shape) != x.numel()) {
        throw std::invalid_argument("reshape: numel mismatch " + shape_str(x.shape) + " -> " +
                                    shape_str(new_shape));
    }
    Tensor<T> out;
    out.shape = std::move(new_shape);
    out.data = std::make_shared<std::vector<T>>(*x.data);
    attach_node(out, {x}, [](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        const std::size_t nn = o.grad->size();
        for (std::size_t i = 0; i < nn; ++i) (*px.grad)[i] += (*o.grad)[i];
    });
    return out;
}

// concatenate along dim 0; all parts must agree on trailing dims
template <typename T>
Tensor<T> concat_dim0(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_dim0: no inputs");
    std::vector<int> rest(parts[0].shape.begin() + 1, parts[0].shape.end());
    int total0 = 0;
    for (const auto& p : parts) {
        std::vector<int> r(p.shape.begin() + 1, p.shape.end());
        if (r != rest) throw std::invalid_argument("concat_dim0: trailing dims mismatch");
        total0 += p.dim(0);
    }
    std::vector<int> out_shape = parts[0].shape;
    out_shape[0] = total0;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::memcpy(out.ptr() + offset, p.ptr(), sizeof(T) * p.data->size());
        offset += p.data->size();
    }
    attach_node(out, parts, [](const Tensor<T>& o) {
        std::size_t offset = 0;
        for (const auto& p : o.node->parents) {
            const std::size_t len = p.data->size();
            if (p.requires_grad)
                for (std::size_t i = 0; i < len; ++i) (*p.grad)[i] += (*o.grad)[offset + i];
            offset += len;
        }
    });
    return out;
}

template <typename T>
Tensor<T> concat_dim0(const Tensor<T>& a, const Tensor<T>& b) {
    return concat_dim0<T>(std::vector<Tensor<T>>{a, b});
}

template <typename T>
Tensor<T> slice_dim0(const Tensor<T>& x, int from, int count) {
    if (x.ndim() < 1 || from < 0 || count <= 0 || from + count > x.dim(0)) {
        throw std::invalid_argument("slice_dim0: range [" + std::to_string(from) + "," +
                                    std::to_string(from + count) + ") out of bounds for " +
                                    shape_str(x.shape));
    }
    std::size_t inner = 1;
    for (int i = 1; i < x.ndim(); ++i) inner *= static_cast<std::size_t>(x.dim(i));
    std::vector<int> out_shape = x.shape;
    out_shape[0] = count;
    Tensor<T> out = Tensor<T>::zeros(out_shape);
    std::memcpy(out.ptr(), x.ptr() + from * inner, sizeof(T) * count * inner);
    attach_node(out, {x}, [from, inner](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        const std::size_t nn = o.grad->size();
        for (std::size_t i = 0; i < nn; ++i) (*px.grad)[from * inner + i] += (*o.grad)[i];
    });
    return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, int from, int count) {
    if (x.ndim() != 2 || from < 0 || count <= 0 || from + count > x.dim(1)) {
        throw std::invalid_argument("slice_cols: bad range for " + shape_str(x.shape));
    }
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros({m, count});
    for (int i = 0; i < m; ++i)
        std::memcpy(out.ptr() + static_cast<std::size_t>(i) * count,
                    x.ptr() + static_cast<std::size_t>(i) * n + from, sizeof(T) * count);
    attach_node(out, {x}, [m, n, from, count](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < count; ++j)
                (*px.grad)[static_cast<std::size_t>(i) * n + from + j] +=
                    (*o.grad)[static_cast<std::size_t>(i) * count + j];
    });
    return out;
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int m = parts[0].dim(0);
    int total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.dim(0) != m) throw std::invalid_argument("concat_cols: row count mismatch");
        total += p.dim(1);
    }
    Tensor<T> out = Tensor<T>::zeros({m, total});
    int col = 0;
    for (const auto& p : parts) {
        const int n = p.dim(1);
        for (int i = 0; i < m; ++i)
            std::memcpy(out.ptr() + static_cast<std::size_t>(i) * total + col,
                        p.ptr() + static_cast<std::size_t>(i) * n, sizeof(T) * n);
        col += n;
    }
    attach_node(out, parts, [m, total](const Tensor<T>& o) {
        int col = 0;
        for (const auto& p : o.node->parents) {
            const int n = p.dim(1);
            if (p.requires_grad) {
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                        (*p.grad)[static_cast<std::size_t>(i) * n + j] +=
                            (*o.grad)[static_cast<std::size_t>(i) * total + col + j];
            }
            col += n;
        }
    });
    return out;
}

// row-wise softmax with max subtraction; rows of the output are probability
// vectors even for large scores
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    if (x.ndim() != 2) throw std::invalid_argument("softmax_rows: need 2-D input, got " + shape_str(x.shape));
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    for (int i = 0; i < m; ++i) {
        const T* row = x.ptr() + static_cast<std::size_t>(i) * n;
        T* orow = out.ptr() + static_cast<std::size_t>(i) * n;
        T mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < n; ++j) orow[j] *= inv;
    }
    attach_node(out, {x}, [m, n](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        for (int i = 0; i < m; ++i) {
            const T* a = o.ptr() + static_cast<std::size_t>(i) * n;
            const T* dy = o.grad->data() + static_cast<std::size_t>(i) * n;
            T dot = T(0);
            for (int j = 0; j < n; ++j) dot += dy[j] * a[j];
            T* dx = px.grad->data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) dx[j] += a[j] * (dy[j] - dot);
        }
    });
    return out;
}

// normalize each row of x[N,d] to zero mean / unit variance, then scale+shift
template <typename T>
Tensor<T> layer_norm_rows(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          double eps = 1e-5) {
    if (x.ndim() != 2 || gamma.ndim() != 1 || beta.ndim() != 1 || gamma.dim(0) != x.dim(1) ||
        beta.dim(0) != x.dim(1)) {
        throw std::invalid_argument("layer_norm_rows: need x[N,d], gamma[d], beta[d]");
    }
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    auto xhat = std::make_shared<std::vector<T>>(x.data->size());
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const T* row = x.ptr() + static_cast<std::size_t>(i) * n;
        T mean = T(0);
        for (int j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (int j = 0; j < n; ++j) {
            const T d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<T>(n);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
        (*inv_std)[i] = inv;
        T* hrow = xhat->data() + static_cast<std::size_t>(i) * n;
        T* orow = out.ptr() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            hrow[j] = (row[j] - mean) * inv;
            orow[j] = hrow[j] * (*gamma.data)[j] + (*beta.data)[j];
        }
    }
    attach_node(out, {x, gamma, beta}, [m, n, xhat, inv_std](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        const auto& pg = o.node->parents[1];
        const auto& pb = o.node->parents[2];
        for (int i = 0; i < m; ++i) {
            const T* dy = o.grad->data() + static_cast<std::size_t>(i) * n;
            const T* h = xhat->data() + static_cast<std::size_t>(i) * n;
            if (pg.requires_grad)
                for (int j = 0; j < n; ++j) (*pg.grad)[j] += dy[j] * h[j];
            if (pb.requires_grad)
                for (int j = 0; j < n; ++j) (*pb.grad)[j] += dy[j];
            if (px.requires_grad) {
                T sum_dh = T(0), sum_dh_h = T(0);
                for (int j = 0; j < n; ++j) {
                    const T dh = dy[j] * (*pg.data)[j];
                    sum_dh += dh;
                    sum_dh_h += dh * h[j];
                }
                const T inv = (*inv_std)[i];
                T* dx = px.grad->data() + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) {
                    const T dh = dy[j] * (*pg.data)[j];
                    dx[j] += inv * (dh - (sum_dh + h[j] * sum_dh_h) / static_cast<T>(n));
                }
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> silu(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    const std::size_t n = x.data->size();
    for (std::size_t i = 0; i < n; ++i) {
        const T v = (*x.data)[i];
        (*out.data)[i] = v / (T(1) + std::exp(-v));
    }
    attach_node(out, {x}, [](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        const std::size_t nn = o.grad->size();
        for (std::size_t i = 0; i < nn; ++i) {
            const T v = (*px.data)[i];
            const T s = T(1) / (T(1) + std::exp(-v));
            (*px.grad)[i] += (*o.grad)[i] * s * (T(1) + v * (T(1) - s));
        }
    });
    return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    constexpr double kSqrt2OverPi = 0.7978845608028654;
    constexpr double kCubic = 0.044715;
    Tensor<T> out = Tensor<T>::zeros(x.shape);
    const std::size_t n = x.data->size();
    for (std::size_t i = 0; i < n; ++i) {
        const T v = (*x.data)[i];
        const T u = static_cast<T>(kSqrt2OverPi) * (v + static_cast<T>(kCubic) * v * v * v);
        (*out.data)[i] = T(0.5) * v * (T(1) + std::tanh(u));
    }
    attach_node(out, {x}, [](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        const std::size_t nn = o.grad->size();
        for (std::size_t i = 0; i < nn; ++i) {
            const T v = (*px.data)[i];
            const T u = static_cast<T>(kSqrt2OverPi) * (v + static_cast<T>(kCubic) * v * v * v);
            const T t = std::tanh(u);
            const T du = static_cast<T>(kSqrt2OverPi) * (T(1) + T(3) * static_cast<T>(kCubic) * v * v);
            (*px.grad)[i] += (*o.grad)[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du);
        }
    });
    return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::zeros({1});
    T acc = T(0);
    for (T v : *x.data) acc += v;
    (*out.data)[0] = acc;
    attach_node(out, {x}, [](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        const T g = (*o.grad)[0];
        for (auto& gv : *px.grad) gv += g;
    });
    return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    const double inv = 1.0 / static_cast<double>(x.numel());
    return scale(sum_all(x), inv);
}

// sum_{i,j} mask[i] * (a[i,j] - target[i,j])^2; target and mask are
// constants of the graph, gradient flows only into a
template <typename T>
Tensor<T> masked_sqerr_sum(const Tensor<T>& a, const Tensor<T>& target, const Tensor<T>& row_mask) {
    check_same_shape(a, target, "masked_sqerr_sum");
    if (a.ndim() != 2 || row_mask.ndim() != 1 || row_mask.dim(0) != a.dim(0)) {
        throw std::invalid_argument("masked_sqerr_sum: need a[m,n], target[m,n], mask[m]");
    }
    const int m = a.dim(0), n = a.dim(1);
    Tensor<T> out = Tensor<T>::zeros({1});
    T acc = T(0);
    for (int i = 0; i < m; ++i) {
        const T w = (*row_mask.data)[i];
        if (w == T(0)) continue;
        const T* arow = a.ptr() + static_cast<std::size_t>(i) * n;
        const T* trow = target.ptr() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T d = arow[j] - trow[j];
            acc += w * d * d;
        }
    }
    (*out.data)[0] = acc;
    Tensor<T> target_c = target.detach();
    Tensor<T> mask_c = row_mask.detach();
    attach_node(out, {a}, [m, n, target_c, mask_c](const Tensor<T>& o) {
        const auto& pa = o.node->parents[0];
        if (!pa.requires_grad) return;
        const T g = (*o.grad)[0];
        for (int i = 0; i < m; ++i) {
            const T w = (*mask_c.data)[i];
            if (w == T(0)) continue;
            const T* arow = pa.ptr() + static_cast<std::size_t>(i) * n;
            const T* trow = target_c.ptr() + static_cast<std::size_t>(i) * n;
            T* grow = pa.grad->data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) grow[j] += g * T(2) * w * (arow[j] - trow[j]);
        }
    });
    return out;
}

namespace detail {

// zero-padded copy of x[C,H,W]; branch-free inner loops downstream
template <typename T>
std::vector<T> pad_plane_copy(const T* xp, int c, int h, int w, int pad) {
    const int ph = h + 2 * pad, pw = w + 2 * pad;
    std::vector<T> out(static_cast<std::size_t>(c) * ph * pw, T(0));
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < h; ++y) {
            std::memcpy(out.data() + (static_cast<std::size_t>(ci) * ph + y + pad) * pw + pad,
                        xp + (static_cast<std::size_t>(ci) * h + y) * w, sizeof(T) * w);
        }
    }
    return out;
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride = 1,
                 int pad = 0) {
    if (x.ndim() != 3 || w.ndim() != 4 || b.ndim() != 1) {
        throw std::invalid_argument("conv2d: need x[C,H,W], w[O,C,kh,kw], b[O]");
    }
    const int cin = x.dim(0), h = x.dim(1), ww = x.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin) {
        throw std::invalid_argument("conv2d: channel mismatch, x has " + std::to_string(cin) +
                                    ", kernel expects " + std::to_string(w.dim(1)));
    }
    if (b.dim(0) != cout) throw std::invalid_argument("conv2d: bias size mismatch");
    if ((h + 2 * pad - kh) % stride != 0 || (ww + 2 * pad - kw) % stride != 0) {
        throw std::invalid_argument("conv2d: spatial dims not divisible by stride");
    }
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (ww + 2 * pad - kw) / stride + 1;
    const int ph = h + 2 * pad, pw = ww + 2 * pad;
    const int npos = oh * ow;
    const int patch = cin * kh * kw;

    // im2col with positions as rows, then one GEMM whose inner axis is the
    // output-channel count; small spatial grids stay fully vectorized
    std::vector<T> xpad = detail::pad_plane_copy(x.ptr(), cin, h, ww, pad);
    std::vector<T> colT(static_cast<std::size_t>(npos) * patch);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* row = colT.data() + (static_cast<std::size_t>(oy) * ow + ox) * patch;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xplane = xpad.data() + static_cast<std::size_t>(ci) * ph * pw;
                for (int ky = 0; ky < kh; ++ky) {
                    const T* src = xplane + static_cast<std::size_t>(oy * stride + ky) * pw + ox * stride;
                    std::memcpy(row, src, sizeof(T) * kw);
                    row += kw;
                }
            }
        }
    }
    // wT[(ci*kh+ky)*kw+kx][co]
    std::vector<T> wT(static_cast<std::size_t>(patch) * cout);
    for (int co = 0; co < cout; ++co) {
        const T* wk = w.ptr() + static_cast<std::size_t>(co) * patch;
        for (int p = 0; p < patch; ++p) wT[static_cast<std::size_t>(p) * cout + co] = wk[p];
    }
    std::vector<T> yT(static_cast<std::size_t>(npos) * cout);
    detail::raw_matmul(colT.data(), wT.data(), yT.data(), npos, patch, cout, false);

    Tensor<T> out = Tensor<T>::zeros({cout, oh, ow});
    T* op = out.ptr();
    for (int r = 0; r < npos; ++r) {
        const T* yrow = yT.data() + static_cast<std::size_t>(r) * cout;
        for (int co = 0; co < cout; ++co) {
            op[static_cast<std::size_t>(co) * npos + r] = yrow[co] + (*b.data)[co];
        }
    }

    attach_node(out, {x, w, b}, [cin, h, ww, cout, kh, kw, stride, pad, oh, ow, ph, pw, npos, patch,
                                 colT = std::move(colT), wT = std::move(wT)](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        const auto& pw_ = o.node->parents[1];
        const auto& pb = o.node->parents[2];
        const T* dy = o.grad->data();
        std::vector<T> dyT(static_cast<std::size_t>(npos) * cout);
        for (int co = 0; co < cout; ++co) {
            const T* dplane = dy + static_cast<std::size_t>(co) * npos;
            for (int r = 0; r < npos; ++r) dyT[static_cast<std::size_t>(r) * cout + co] = dplane[r];
        }
        if (pb.requires_grad) {
            for (int r = 0; r < npos; ++r) {
                const T* drow = dyT.data() + static_cast<std::size_t>(r) * cout;
                for (int co = 0; co < cout; ++co) (*pb.grad)[co] += drow[co];
            }
        }
        if (pw_.requires_grad) {
            // dWT = colT^T * dyT, folded back into [cout, cin, kh, kw]
            std::vector<T> dwT(static_cast<std::size_t>(patch) * cout, T(0));
            detail::raw_matmul_at(colT.data(), dyT.data(), dwT.data(), npos, patch, cout, false);
            for (int co = 0; co < cout; ++co) {
                T* wk = pw_.grad->data() + static_cast<std::size_t>(co) * patch;
                for (int p = 0; p < patch; ++p) wk[p] += dwT[static_cast<std::size_t>(p) * cout + co];
            }
        }
        if (px.requires_grad) {
            // dcolT = dyT * wT^T, scattered back through the padding
            std::vector<T> dcolT(static_cast<std::size_t>(npos) * patch);
            detail::raw_matmul_bt(dyT.data(), wT.data(), dcolT.data(), npos, cout, patch, false);
            std::vector<T> dxpad(static_cast<std::size_t>(cin) * ph * pw, T(0));
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const T* row = dcolT.data() + (static_cast<std::size_t>(oy) * ow + ox) * patch;
                    for (int ci = 0; ci < cin; ++ci) {
                        T* xplane = dxpad.data() + static_cast<std::size_t>(ci) * ph * pw;
                        for (int ky = 0; ky < kh; ++ky) {
                            T* dst = xplane + static_cast<std::size_t>(oy * stride + ky) * pw + ox * stride;
                            for (int kx = 0; kx < kw; ++kx) dst[kx] += row[kx];
                            row += kw;
                        }
                    }
                }
            }
            for (int ci = 0; ci < cin; ++ci) {
                for (int y = 0; y < h; ++y) {
                    const T* src = dxpad.data() + (static_cast<std::size_t>(ci) * ph + y + pad) * pw + pad;
                    T* dst = px.grad->data() + (static_cast<std::size_t>(ci) * h + y) * ww;
                    for (int xx = 0; xx < ww; ++xx) dst[xx] += src[xx];
                }
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
    if (x.ndim() != 3) throw std::invalid_argument("upsample_nearest2: need x[C,H,W]");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor<T> out = Tensor<T>::zeros({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                (*out.data)[(static_cast<std::size_t>(ch) * 2 * h + y) * 2 * w + xx] =
                    (*x.data)[(static_cast<std::size_t>(ch) * h + y / 2) * w + xx / 2];
    attach_node(out, {x}, [c, h, w](const Tensor<T>& o) {
        const auto& px = o.node->parents[0];
        if (!px.requires_grad) return;
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    (*px.grad)[(static_cast<std::size_t>(ch) * h + y / 2) * w + xx / 2] +=
                        (*o.grad)[(static_cast<std::size_t>(ch) * 2 * h + y) * 2 * w + xx];
    });
    return out;
}

// out = base; then for each (src_row, dst_row) pair out[dst] += source[src].
// Pairs are applied in canonical sorted order, so permuting the list gives a
// bit-identical result even with duplicate destinations.
template <typename T>
Tensor<T> row_scatter_add(const Tensor<T>& base, const Tensor<T>& source,
                          std::vector<std::pair<int, int>> pairs) {
    if (base.ndim() != 2 || source.ndim() != 2 || base.dim(1) != source.dim(1)) {
        throw std::invalid_argument("row_scatter_add: need base[N,d], source[M,d]");
    }
    const int n = base.dim(1);
    for (const auto& pr : pairs) {
        if (pr.first < 0 || pr.first >= source.dim(0) || pr.second < 0 || pr.second >= base.dim(0)) {
            throw std::invalid_argument("row_scatter_add: pair index out of range");
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    Tensor<T> out(base.shape, *base.data);
    for (const auto& pr : pairs) {
        const T* srow = source.ptr() + static_cast<std::size_t>(pr.first) * n;
        T* drow = out.ptr() + static_cast<std::size_t>(pr.second) * n;
        for (int j = 0; j < n; ++j) drow[j] += srow[j];
    }
    attach_node(out, {base, source}, [pairs, n](const Tensor<T>& o) {
        const auto& pb = o.node->parents[0];
        const auto& ps = o.node->parents[1];
        if (pb.requires_grad) {
            const std::size_t nn = o.grad->size();
            for (std::size_t i = 0; i < nn; ++i) (*pb.grad)[i] += (*o.grad)[i];
        }
        if (ps.requires_grad) {
            for (const auto& pr : pairs) {
                const T* drow = o.grad->data() + static_cast<std::size_t>(pr.second) * n;
                T* srow = ps.grad->data() + static_cast<std::size_t>(pr.first) * n;
                for (int j = 0; j < n; ++j) srow[j] += drow[j];
            }
        }
    });
    return out;
}

}  // namespace fpaint
