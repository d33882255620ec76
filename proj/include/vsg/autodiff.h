#ifndef VSG_AUTODIFF_H_
#define VSG_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace vsg {

// Row-major dense parameter tensor. Vectors have cols == 1.
struct Tensor {
  std::string name;
  int rows = 0;
  int cols = 1;
  std::vector<double> data;

  size_t size() const { return data.size(); }
};

class ParamSet {
 public:
  int Add(std::string name, int rows, int cols);
  int index(const std::string& name) const;
  Tensor& operator[](int i) { return tensors_[i]; }
  const Tensor& operator[](int i) const { return tensors_[i]; }
  int count() const { return static_cast<int>(tensors_.size()); }
  size_t total_size() const;
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // Same layout, all zeros.
  ParamSet ZerosLike() const;
  void SetZero();
  bool SameLayout(const ParamSet& other) const;

 private:
  std::vector<Tensor> tensors_;
};

// Reverse-mode differentiation over vector-valued nodes. A tape built with a
// null gradient sink records no backward closures (inference only).
class Tape {
 public:
  using Var = int;

  Tape(const ParamSet& params, ParamSet* grads);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(std::vector<double> value);
  const std::vector<double>& value(Var v) const { return nodes_[v].value; }
  size_t size(Var v) const { return nodes_[v].value.size(); }

  // W x (+ b). W is rows x cols, x has cols entries.
  Var MatVec(int weight, Var x);
  Var Affine(int weight, Var x, int bias);
  // The parameter tensor itself as a node.
  Var Param(int tensor);

  Var Add(Var a, Var b);
  Var Mul(Var a, Var b);
  Var OneMinus(Var a);
  Var Sigmoid(Var a);
  Var Tanh(Var a);
  Var Concat(std::span<const Var> parts);
  Var Slice(Var a, size_t offset, size_t length);
  // Inner product of two equal-length nodes; scalar result.
  Var Dot(Var a, Var b);
  // a * s where s is a scalar node.
  Var Scale(Var a, Var s);
  // Softmax across scalar nodes; result has one entry per input.
  Var Softmax(std::span<const Var> scalars);
  // sum_i w[i] * items[i] where w is a node with items.size() entries.
  Var WeightedSum(std::span<const Var> items, Var weights);
  // Weighted cross-entropy of softmax(logits) restricted to allowed labels.
  Var MaskedCrossEntropy(Var logits, std::span<const bool> allowed, int label, double weight);
  Var Sum(std::span<const Var> scalars);

  // Seeds d(root)/d(root) = 1 and accumulates parameter gradients.
  void Backward(Var root);

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    std::function<void()> backward;
  };

  Var Push(std::vector<double> value);
  std::vector<double>& grad(Var v) { return nodes_[v].grad; }
  bool recording() const { return grads_ != nullptr; }

  const ParamSet& params_;
  ParamSet* grads_;
  std::deque<Node> nodes_;
};

// Softmax over allowed entries, exact zeros elsewhere.
std::vector<double> MaskedSoftmax(std::span<const double> logits, std::span<const bool> allowed);

}  // namespace vsg

#endif  // VSG_AUTODIFF_H_
