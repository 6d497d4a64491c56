#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpaint/tensor.hpp"

namespace fpaint {

// Named leaf tensor with gradient storage of identical shape.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
};

// Registration-ordered parameter registry. Names are unique and the order is
// fixed at construction time, so optimizer sweeps and checkpoints are stable
// across runs.
template <typename T>
class ParamStore {
public:
    // returns a handle sharing the same storage; safe to keep by value in
    // module structs (the optimizer mutates values in place)
    Tensor<T> add(const std::string& name, Tensor<T> init) {
        if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate param name " + name);
        init.set_requires_grad();
        index_[name] = params_.size();
        params_.push_back(Param<T>{name, init});
        return init;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Param<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("ParamStore: no param named " + name);
        return params_[it->second];
    }

    std::size_t size() const { return params_.size(); }
    std::vector<Param<T>>& all() { return params_; }
    const std::vector<Param<T>>& all() const { return params_; }

    void zero_grad() {
        for (auto& p : params_) p.value.zero_grad();
    }

    std::int64_t total_elements() const {
        std::int64_t n = 0;
        for (const auto& p : params_) n += p.value.numel();
        return n;
    }

private:
    std::vector<Param<T>> params_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace fpaint
