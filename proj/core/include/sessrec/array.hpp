#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "sessrec/error.hpp"

namespace sessrec::ad {

// Dense row-major array. The engine only ever needs rank-2 tensors; scalars
// are [1 x 1] and vectors [1 x d].
template <typename T>
struct Array {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  Array() = default;
  Array(std::vector<std::int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require(static_cast<std::int64_t>(data.size()) == count(shape), "array",
            "data length does not match shape");
  }

  static std::int64_t count(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Array zeros(std::vector<std::int64_t> s) {
    Array a;
    a.data.assign(static_cast<std::size_t>(count(s)), T{0});
    a.shape = std::move(s);
    return a;
  }

  static Array full(std::vector<std::int64_t> s, T v) {
    Array a = zeros(std::move(s));
    for (auto& x : a.data) x = v;
    return a;
  }

  static Array scalar(T v) { return Array({1, 1}, {v}); }

  static Array row_vector(std::vector<T> v) {
    std::int64_t n = static_cast<std::int64_t>(v.size());
    return Array({1, n}, std::move(v));
  }

  bool empty() const { return data.empty(); }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  std::int64_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::int64_t cols() const { return shape.empty() ? 0 : shape.back(); }

  T* row(std::int64_t i) { return data.data() + i * cols(); }
  const T* row(std::int64_t i) const { return data.data() + i * cols(); }

  T& at(std::int64_t i, std::int64_t j) { return data[i * cols() + j]; }
  T at(std::int64_t i, std::int64_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }
};

template <typename T>
inline void check_2d(const Array<T>& a, const char* what) {
  require(a.shape.size() == 2, "array", std::string(what) + ": expected rank-2 array");
}

}  // namespace sessrec::ad
