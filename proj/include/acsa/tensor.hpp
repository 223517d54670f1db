#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acsa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes between operands of a primitive.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (corpora, embedding files, checkpoints).
struct DataError : Error {
  using Error::Error;
};

// Bad run configuration: unknown key, type error, missing file.
struct ConfigError : Error {
  using Error::Error;
};

using Shape = std::vector<int>;

inline long long shape_numel(const Shape& s) {
  long long n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense row-major tensor of doubles. Rank 0 is a scalar, rank 1 a vector,
// rank 2 a matrix; nothing in this model needs more. All training runs at
// 64-bit precision so finite-difference checks stay meaningful.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }

  static Tensor full(Shape s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t;
    t.data = {v};
    return t;
  }

  static Tensor of(Shape s, std::vector<double> values) {
    if (shape_numel(s) != static_cast<long long>(values.size()))
      throw ShapeError("Tensor::of: " + shape_str(s) + " needs " +
                       std::to_string(shape_numel(s)) + " values, got " +
                       std::to_string(values.size()));
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
  }

  long long numel() const { return static_cast<long long>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return numel() == 1; }

  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols() + j]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  double l2_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }
};

// Deterministic RNG with independent derived streams. Streams let the
// training loop separate init / dropout / shuffle noise so that changing
// one consumer does not shift the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : gen_(mix(seed, stream)) {}

  std::uint64_t next() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(static_cast<int>(i)))]);
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace acsa
