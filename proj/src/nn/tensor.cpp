#include "cfcdc/nn/tensor.hpp"

#include "cfcdc/error.hpp"

namespace cfcdc::nn {

Parameter& ParameterStore::create(const std::string& name, Matrix init) {
  if (by_name_.contains(name)) throw InputError("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  Parameter* p = params_.back().get();
  by_name_.emplace(name, p);
  return *p;
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParameterStore::parameters() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::parameters() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Index ParameterStore::scalar_count() const {
  Index n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

Matrix& Gradients::at(const Parameter* p) {
  auto it = grads_.find(p);
  if (it == grads_.end()) {
    it = grads_.emplace(p, Matrix::Zero(p->value().rows(), p->value().cols())).first;
  }
  return it->second;
}

const Matrix* Gradients::find(const Parameter* p) const {
  auto it = grads_.find(p);
  return it == grads_.end() ? nullptr : &it->second;
}

void Gradients::accumulate(const Parameter* p, const Matrix& g) {
  auto it = grads_.find(p);
  if (it == grads_.end()) {
    grads_.emplace(p, g);
  } else {
    it->second += g;
  }
}

void Gradients::add(const Gradients& other, double scale) {
  for (const auto& [p, g] : other.grads_) {
    auto it = grads_.find(p);
    if (it == grads_.end()) {
      grads_.emplace(p, g * scale);
    } else {
      it->second += g * scale;
    }
  }
}

void Gradients::scale(double s) {
  for (auto& [p, g] : grads_) g *= s;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const auto& [p, g] : grads_) total += g.squaredNorm();
  return total;
}

}  // namespace cfcdc::nn
