#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adsep/graph/real.hpp"

namespace adsep::graph::inline ADSEP_REAL_NS {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Values are stored and combined as Real. In f32 mode every recorded op
// output is rounded to the nearest float, which reproduces single-precision
// storage between ops.
enum class Precision { f32, f64 };

void round_to(std::span<Real> values, Precision precision);

// Dense row-major real array of rank <= 4. A rank-0 tensor holds one value.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, Real fill = 0.0);
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  // The single value of a size-1 tensor.
  Real item() const;

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Named trainable tensors. std::map keeps a stable, sorted iteration order,
// which fixes checkpoint layout and gradient accumulation order.
using ParameterSet = std::map<std::string, Tensor>;
using GradientMap = std::map<std::string, Tensor>;

}  // namespace adsep::graph::inline ADSEP_REAL_NS
