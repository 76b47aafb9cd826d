#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace cfcdc::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// A named trainable tensor. Address identity is what ties gradients to
// parameters, so a Parameter never moves once created.
class Parameter {
 public:
  Parameter(std::string name, Matrix value) : name_(std::move(name)), value_(std::move(value)) {}
  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;

  const std::string& name() const { return name_; }
  Matrix& value() { return value_; }
  const Matrix& value() const { return value_; }
  Index size() const { return value_.size(); }

 private:
  std::string name_;
  Matrix value_;
};

// Owns a model's parameters in creation order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter& create(const std::string& name, Matrix init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t size() const { return params_.size(); }
  Index scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

// Sparse map from parameter to accumulated gradient.
class Gradients {
 public:
  Matrix& at(const Parameter* p);
  const Matrix* find(const Parameter* p) const;
  void accumulate(const Parameter* p, const Matrix& g);
  void add(const Gradients& other, double scale = 1.0);
  void scale(double s);
  void clear() { grads_.clear(); }
  bool empty() const { return grads_.empty(); }
  double squared_norm() const;

  const std::unordered_map<const Parameter*, Matrix>& entries() const { return grads_; }

 private:
  std::unordered_map<const Parameter*, Matrix> grads_;
};

}  // namespace cfcdc::nn
