#include "adsep/graph/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace adsep::graph::inline ADSEP_REAL_NS {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void round_to(std::span<Real> values, Precision precision) {
  if (precision == Precision::f64) return;
  for (auto& v : values) v = static_cast<Real>(static_cast<float>(v));
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)) {
  if (shape_.size() > 4) throw std::invalid_argument("Tensor: rank above 4");
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_.size() > 4) throw std::invalid_argument("Tensor: rank above 4");
  if (data_.size() != shape_size(shape_))
    throw std::invalid_argument("Tensor: " + std::to_string(data_.size()) +
                                " values do not fill shape " + shape_string(shape_));
}

Real Tensor::item() const {
  if (data_.size() != 1)
    throw std::invalid_argument("Tensor::item on shape " + shape_string(shape_));
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size())
    throw std::invalid_argument("Tensor::reshaped: " + shape_string(shape_) + " -> " +
                                shape_string(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (Real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace adsep::graph::inline ADSEP_REAL_NS
