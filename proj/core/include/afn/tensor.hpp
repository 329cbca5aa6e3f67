#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace afn {

// Named parameter or buffer tensor: flat 64-bit storage plus a rank-1 or
// rank-2 shape. Gradients live alongside values; buffers (running BN
// statistics) are registered with trainable = false and are skipped by the
// optimizer and the gradient checker but still serialized.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }

  double& at(std::size_t r, std::size_t c) { return value[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return value[r * cols() + c]; }
  double& gat(std::size_t r, std::size_t c) { return grad[r * cols() + c]; }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Registry of a model's tensors. Registration order is fixed by the model's
// constructor and is part of its deterministic behavior: initialization
// draws, optimizer traversal, and checkpoint layout all follow it.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape, bool trainable = true);

  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
  Tensor& get(const std::string& name);              // throws if absent
  const Tensor& get(const std::string& name) const;  // throws if absent

  const std::vector<std::unique_ptr<Tensor>>& tensors() const { return tensors_; }
  std::vector<Tensor*> trainable_tensors();

  void zero_grads();

  // Deep copy of every tensor's values (in registration order) and restore.
  std::vector<std::vector<double>> snapshot_values() const;
  void restore_values(const std::vector<std::vector<double>>& snap);

 private:
  std::vector<std::unique_ptr<Tensor>> tensors_;
  std::map<std::string, Tensor*> index_;
};

}  // namespace afn
