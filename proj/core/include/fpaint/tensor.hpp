#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "fpaint/rng.hpp"

namespace fpaint {

inline std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor shape entries must be positive");
        n *= d;
    }
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

template <typename T>
struct Node;

// Dense row-major tensor that doubles as a node in the reverse-mode graph.
// Copies are shallow: data, grad and the graph node are shared. Ops treat
// tensors as immutable once produced; only the optimizer writes into leaf
// values between steps.
template <typename T>
class Tensor {
public:
    std::vector<int> shape;
    std::shared_ptr<std::vector<T>> data;
    std::shared_ptr<std::vector<T>> grad;  // allocated iff requires_grad
    std::shared_ptr<Node<T>> node;         // non-null iff produced by a tracked op
    bool requires_grad = false;

    Tensor() = default;

    Tensor(std::vector<int> s, std::vector<T> values) : shape(std::move(s)) {
        if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
            throw std::invalid_argument("tensor data length does not match shape " + shape_str(shape));
        }
        data = std::make_shared<std::vector<T>>(std::move(values));
    }

    static Tensor zeros(std::vector<int> s) {
        std::int64_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<T>(static_cast<std::size_t>(n), T(0)));
    }

    static Tensor full(std::vector<int> s, T v) {
        std::int64_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<T>(static_cast<std::size_t>(n), v));
    }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    static Tensor randn(Rng& rng, std::vector<int> s, double stddev = 1.0) {
        std::int64_t n = shape_numel(s);
        std::vector<T> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = static_cast<T>(rng.normal() * stddev);
        return Tensor(std::move(s), std::move(v));
    }

    std::int64_t numel() const { return data ? static_cast<std::int64_t>(data->size()) : 0; }
    bool defined() const { return static_cast<bool>(data); }

    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    int ndim() const { return static_cast<int>(shape.size()); }

    T* ptr() { return data->data(); }
    const T* ptr() const { return data->data(); }
    std::vector<T>& vec() { return *data; }
    const std::vector<T>& vec() const { return *data; }

    T at(std::int64_t i) const { return (*data)[static_cast<std::size_t>(i)]; }

    void set_requires_grad() {
        requires_grad = true;
        if (!grad) grad = std::make_shared<std::vector<T>>(data->size(), T(0));
    }

    void zero_grad() {
        if (grad) std::fill(grad->begin(), grad->end(), T(0));
    }

    // value copy with fresh storage, detached from the graph
    Tensor clone_detached() const {
        Tensor out(shape, *data);
        return out;
    }

    // shares storage but drops the graph edge
    Tensor detach() const {
        Tensor out;
        out.shape = shape;
        out.data = data;
        return out;
    }

    bool all_finite() const {
        for (T v : *data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }
};

template <typename T>
struct Node {
    std::vector<Tensor<T>> parents;
    // receives the op output; reads output.grad, accumulates into parent grads
    std::function<void(const Tensor<T>&)> backward;
    std::uint64_t seq = 0;
};

namespace detail {
inline std::uint64_t& node_seq_counter() {
    thread_local std::uint64_t counter = 0;
    return counter;
}
inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(detail::grad_mode()) { detail::grad_mode() = false; }
    ~NoGradGuard() { detail::grad_mode() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
void attach_node(Tensor<T>& out, std::type_identity_t<std::vector<Tensor<T>>> parents,
                 std::type_identity_t<std::function<void(const Tensor<T>&)>> backward) {
    bool track = false;
    if (grad_enabled()) {
        for (const auto& p : parents) {
            if (p.requires_grad) {
                track = true;
                break;
            }
        }
    }
    if (!track) return;
    out.set_requires_grad();
    out.node = std::make_shared<Node<T>>();
    out.node->parents = std::move(parents);
    out.node->backward = std::move(backward);
    out.node->seq = ++detail::node_seq_counter();
}

// Reverse pass from a scalar loss. Node sequence numbers give a topological
// order because graphs are built forward; accumulation order is therefore
// deterministic and repeated runs are bit-identical.
template <typename T>
void backward(Tensor<T>& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(loss.shape));
    }
    if (!loss.requires_grad) return;
    if (!loss.grad) loss.grad = std::make_shared<std::vector<T>>(1, T(0));
    (*loss.grad)[0] = T(1);

    std::vector<Tensor<T>> stack{loss};
    std::unordered_set<Node<T>*> seen;
    std::vector<Tensor<T>> ordered;
    while (!stack.empty()) {
        Tensor<T> t = stack.back();
        stack.pop_back();
        if (!t.node || seen.count(t.node.get())) continue;
        seen.insert(t.node.get());
        ordered.push_back(t);
        for (auto& p : t.node->parents) {
            if (p.node && !seen.count(p.node.get())) stack.push_back(p);
            if (p.requires_grad && !p.grad) p.grad = std::make_shared<std::vector<T>>(p.data->size(), T(0));
        }
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Tensor<T>& a, const Tensor<T>& b) { return a.node->seq > b.node->seq; });
    for (auto& t : ordered) {
        t.node->backward(t);
    }
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape != b.shape) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                    " vs " + shape_str(b.shape));
    }
}

template <typename T>
void ensure_finite(const Tensor<T>& t, const char* where) {
    if (!t.all_finite()) {
        throw std::runtime_error(std::string(where) + ": non-finite values");
    }
}

}  // namespace fpaint
