#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "baitradar/rng.hpp"

namespace baitradar {

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double value);
  bool all_finite() const;
  std::string shape_string() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& tensor, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
};

/// Named parameters with stable indices. Names are unique.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws std::out_of_range for unknown names.
  std::size_t index_of(std::string_view name) const;
  const Tensor& value(std::string_view name) const { return params_[index_of(name)].value; }

  /// Names in lexicographic order.
  std::vector<std::string> sorted_names() const;
  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Gradient tensors aligned with a ParameterSet's indices.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet& params);

  Tensor& operator[](std::size_t i) { return grads_[i]; }
  const Tensor& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  /// Element-wise += in index order.
  void accumulate(const Gradients& other);
  void scale(double factor);

 private:
  std::vector<Tensor> grads_;
};

}  // namespace baitradar
