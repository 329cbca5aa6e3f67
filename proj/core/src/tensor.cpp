#include "afn/tensor.hpp"

#include <stdexcept>

namespace afn {

Tensor& ParamStore::add(const std::string& name, std::vector<std::size_t> shape, bool trainable) {
  if (index_.count(name) != 0) {
    throw std::invalid_argument("ParamStore: duplicate tensor name '" + name + "'");
  }
  if (shape.empty() || shape.size() > 2) {
    throw std::invalid_argument("ParamStore: tensor rank must be 1 or 2: '" + name + "'");
  }
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("ParamStore: zero dimension in '" + name + "'");
    n *= d;
  }
  auto t = std::make_unique<Tensor>();
  t->name = name;
  t->shape = std::move(shape);
  t->value.assign(n, 0.0);
  t->grad.assign(n, 0.0);
  t->trainable = trainable;
  tensors_.push_back(std::move(t));
  Tensor* ptr = tensors_.back().get();
  index_[name] = ptr;
  return *ptr;
}

Tensor* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

const Tensor* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  Tensor* t = find(name);
  if (t == nullptr) throw std::invalid_argument("ParamStore: no tensor named '" + name + "'");
  return *t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw std::invalid_argument("ParamStore: no tensor named '" + name + "'");
  return *t;
}

std::vector<Tensor*> ParamStore::trainable_tensors() {
  std::vector<Tensor*> out;
  for (auto& t : tensors_) {
    if (t->trainable) out.push_back(t.get());
  }
  return out;
}

void ParamStore::zero_grads() {
  for (auto& t : tensors_) t->zero_grad();
}

std::vector<std::vector<double>> ParamStore::snapshot_values() const {
  std::vector<std::vector<double>> snap;
  snap.reserve(tensors_.size());
  for (const auto& t : tensors_) snap.push_back(t->value);
  return snap;
}

void ParamStore::restore_values(const std::vector<std::vector<double>>& snap) {
  if (snap.size() != tensors_.size()) {
    throw std::invalid_argument("ParamStore: snapshot does not match tensor count");
  }
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (snap[i].size() != tensors_[i]->value.size()) {
      throw std::invalid_argument("ParamStore: snapshot shape mismatch for '" +
                                  tensors_[i]->name + "'");
    }
    tensors_[i]->value = snap[i];
  }
}

}  // namespace afn
