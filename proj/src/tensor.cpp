#include "baitradar/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "baitradar/error.hpp"

namespace baitradar {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string());
  }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape_[i]);
  }
  return out + "]";
}

void glorot_uniform(Tensor& tensor, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : tensor.values()) v = rng.uniform(-s, s);
}

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  const std::size_t idx = params_.size();
  Parameter p;
  p.grad = Tensor(value.shape());
  p.first_moment = Tensor(value.shape());
  p.second_moment = Tensor(value.shape());
  p.value = std::move(value);
  p.name = name;
  params_.push_back(std::move(p));
  index_.emplace(std::move(name), idx);
  return idx;
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParameterSet::sorted_names() const {
  std::vector<std::string> names;
  names.reserve(index_.size());
  for (const auto& [name, idx] : index_) names.push_back(name);
  return names;
}

void ParameterSet::zero_grads() {
  for (Parameter& p : params_) p.grad.fill(0.0);
}

Gradients::Gradients(const ParameterSet& params) {
  grads_.reserve(params.size());
  for (const Parameter& p : params) grads_.emplace_back(p.value.shape());
}

void Gradients::zero() {
  for (Tensor& g : grads_) g.fill(0.0);
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    double* dst = grads_[i].data();
    const double* src = other.grads_[i].data();
    const std::size_t n = grads_[i].size();
    for (std::size_t k = 0; k < n; ++k) dst[k] += src[k];
  }
}

void Gradients::scale(double factor) {
  for (Tensor& g : grads_) {
    for (double& v : g.values()) v *= factor;
  }
}

}  // namespace baitradar
