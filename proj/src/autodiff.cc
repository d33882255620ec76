#include "vsg/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vsg/error.h"

namespace vsg {

int ParamSet::Add(std::string name, int rows, int cols) {
  tensors_.push_back({std::move(name), rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0)});
  return static_cast<int>(tensors_.size()) - 1;
}

int ParamSet::index(const std::string& name) const {
  for (size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return static_cast<int>(i);
  }
  throw Error(ErrorKind::kInvalidArgument, "no parameter named " + name);
}

size_t ParamSet::total_size() const {
  size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& t : tensors_) out.Add(t.name, t.rows, t.cols);
  return out;
}

void ParamSet::SetZero() {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (other.tensors_.size() != tensors_.size()) return false;
  for (size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

std::vector<double> MaskedSoftmax(std::span<const double> logits, std::span<const bool> allowed) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i) {
    if (allowed[i]) max_logit = std::max(max_logit, logits[i]);
  }
  std::vector<double> p(logits.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!allowed[i]) continue;
    p[i] = std::exp(logits[i] - max_logit);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

Tape::Tape(const ParamSet& params, ParamSet* grads) : params_(params), grads_(grads) {
  if (grads_ != nullptr && !grads_->SameLayout(params_)) {
    throw Error(ErrorKind::kShapeMismatch, "gradient sink layout differs from parameters");
  }
}

Tape::Var Tape::Push(std::vector<double> value) {
  Node node;
  if (recording()) node.grad.assign(value.size(), 0.0);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return static_cast<Var>(nodes_.size()) - 1;
}

Tape::Var Tape::Constant(std::vector<double> value) { return Push(std::move(value)); }

Tape::Var Tape::MatVec(int weight, Var x) {
  const Tensor& w = params_[weight];
  if (static_cast<size_t>(w.cols) != size(x)) {
    throw Error(ErrorKind::kShapeMismatch, w.name + " expects " + std::to_string(w.cols) + " inputs, got " +
                                               std::to_string(size(x)));
  }
  std::vector<double> out(w.rows, 0.0);
  const std::vector<double>& xv = value(x);
  for (int r = 0; r < w.rows; ++r) {
    const double* row = &w.data[static_cast<size_t>(r) * w.cols];
    double acc = 0.0;
    for (int c = 0; c < w.cols; ++c) acc += row[c] * xv[c];
    out[r] = acc;
  }
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, weight, x, y] {
      const Tensor& w = params_[weight];
      Tensor& gw = (*grads_)[weight];
      const std::vector<double>& gy = grad(y);
      const std::vector<double>& xv = value(x);
      std::vector<double>& gx = grad(x);
      for (int r = 0; r < w.rows; ++r) {
        const double g = gy[r];
        if (g == 0.0) continue;
        const double* row = &w.data[static_cast<size_t>(r) * w.cols];
        double* grow = &gw.data[static_cast<size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) {
          grow[c] += g * xv[c];
          gx[c] += g * row[c];
        }
      }
    };
  }
  return y;
}

Tape::Var Tape::Param(int tensor) {
  const Var y = Push(params_[tensor].data);
  if (recording()) {
    nodes_[y].backward = [this, tensor, y] {
      auto& g = (*grads_)[tensor].data;
      const auto& gy = grad(y);
      for (size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
    };
  }
  return y;
}

Tape::Var Tape::Affine(int weight, Var x, int bias) { return Add(MatVec(weight, x), Param(bias)); }

Tape::Var Tape::Add(Var a, Var b) {
  if (size(a) != size(b)) throw Error(ErrorKind::kShapeMismatch, "Add operands differ in size");
  std::vector<double> out = value(a);
  const auto& bv = value(b);
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, b, y] {
      const auto& gy = grad(y);
      auto& ga = grad(a);
      auto& gb = grad(b);
      for (size_t i = 0; i < gy.size(); ++i) {
        ga[i] += gy[i];
        gb[i] += gy[i];
      }
    };
  }
  return y;
}

Tape::Var Tape::Mul(Var a, Var b) {
  if (size(a) != size(b)) throw Error(ErrorKind::kShapeMismatch, "Mul operands differ in size");
  std::vector<double> out = value(a);
  const auto& bv = value(b);
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, b, y] {
      const auto& gy = grad(y);
      const auto& av = value(a);
      const auto& bv = value(b);
      auto& ga = grad(a);
      auto& gb = grad(b);
      for (size_t i = 0; i < gy.size(); ++i) {
        ga[i] += gy[i] * bv[i];
        gb[i] += gy[i] * av[i];
      }
    };
  }
  return y;
}

Tape::Var Tape::OneMinus(Var a) {
  std::vector<double> out = value(a);
  for (auto& v : out) v = 1.0 - v;
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, y] {
      const auto& gy = grad(y);
      auto& ga = grad(a);
      for (size_t i = 0; i < gy.size(); ++i) ga[i] -= gy[i];
    };
  }
  return y;
}

Tape::Var Tape::Sigmoid(Var a) {
  std::vector<double> out = value(a);
  for (auto& v : out) v = 1.0 / (1.0 + std::exp(-v));
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, y] {
      const auto& gy = grad(y);
      const auto& yv = value(y);
      auto& ga = grad(a);
      for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * yv[i] * (1.0 - yv[i]);
    };
  }
  return y;
}

Tape::Var Tape::Tanh(Var a) {
  std::vector<double> out = value(a);
  for (auto& v : out) v = std::tanh(v);
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, y] {
      const auto& gy = grad(y);
      const auto& yv = value(y);
      auto& ga = grad(a);
      for (size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * (1.0 - yv[i] * yv[i]);
    };
  }
  return y;
}

Tape::Var Tape::Concat(std::span<const Var> parts) {
  std::vector<double> out;
  for (Var p : parts) out.insert(out.end(), value(p).begin(), value(p).end());
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, parts = std::vector<Var>(parts.begin(), parts.end()), y] {
      const auto& gy = grad(y);
      size_t offset = 0;
      for (Var p : parts) {
        auto& gp = grad(p);
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += gy[offset + i];
        offset += gp.size();
      }
    };
  }
  return y;
}

Tape::Var Tape::Slice(Var a, size_t offset, size_t length) {
  if (offset + length > size(a)) throw Error(ErrorKind::kShapeMismatch, "Slice out of range");
  const auto& av = value(a);
  const Var y = Push(std::vector<double>(av.begin() + offset, av.begin() + offset + length));
  if (recording()) {
    nodes_[y].backward = [this, a, offset, y] {
      const auto& gy = grad(y);
      auto& ga = grad(a);
      for (size_t i = 0; i < gy.size(); ++i) ga[offset + i] += gy[i];
    };
  }
  return y;
}

Tape::Var Tape::Dot(Var a, Var b) {
  if (size(a) != size(b)) throw Error(ErrorKind::kShapeMismatch, "Dot operands differ in size");
  const auto& av = value(a);
  const auto& bv = value(b);
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  const Var y = Push({acc});
  if (recording()) {
    nodes_[y].backward = [this, a, b, y] {
      const double g = grad(y)[0];
      const auto& av = value(a);
      const auto& bv = value(b);
      auto& ga = grad(a);
      auto& gb = grad(b);
      for (size_t i = 0; i < av.size(); ++i) {
        ga[i] += g * bv[i];
        gb[i] += g * av[i];
      }
    };
  }
  return y;
}

Tape::Var Tape::Scale(Var a, Var s) {
  if (size(s) != 1) throw Error(ErrorKind::kShapeMismatch, "Scale expects a scalar");
  std::vector<double> out = value(a);
  const double k = value(s)[0];
  for (auto& v : out) v *= k;
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, a, s, y] {
      const auto& gy = grad(y);
      const auto& av = value(a);
      const double k = value(s)[0];
      auto& ga = grad(a);
      double gs = 0.0;
      for (size_t i = 0; i < gy.size(); ++i) {
        ga[i] += gy[i] * k;
        gs += gy[i] * av[i];
      }
      grad(s)[0] += gs;
    };
  }
  return y;
}

Tape::Var Tape::Softmax(std::span<const Var> scalars) {
  std::vector<double> logits;
  for (Var s : scalars) logits.push_back(value(s)[0]);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_logit = std::max(max_logit, l);
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, inputs = std::vector<Var>(scalars.begin(), scalars.end()), y] {
      const auto& gy = grad(y);
      const auto& p = value(y);
      double dot = 0.0;
      for (size_t i = 0; i < p.size(); ++i) dot += gy[i] * p[i];
      for (size_t i = 0; i < p.size(); ++i) grad(inputs[i])[0] += p[i] * (gy[i] - dot);
    };
  }
  return y;
}

Tape::Var Tape::WeightedSum(std::span<const Var> items, Var weights) {
  if (items.empty() || size(weights) != items.size()) {
    throw Error(ErrorKind::kShapeMismatch, "WeightedSum needs one weight per item");
  }
  const auto& w = value(weights);
  std::vector<double> out(size(items[0]), 0.0);
  for (size_t k = 0; k < items.size(); ++k) {
    const auto& v = value(items[k]);
    for (size_t i = 0; i < out.size(); ++i) out[i] += w[k] * v[i];
  }
  const Var y = Push(std::move(out));
  if (recording()) {
    nodes_[y].backward = [this, inputs = std::vector<Var>(items.begin(), items.end()), weights, y] {
      const auto& gy = grad(y);
      const auto& w = value(weights);
      auto& gw = grad(weights);
      for (size_t k = 0; k < inputs.size(); ++k) {
        const auto& v = value(inputs[k]);
        auto& gv = grad(inputs[k]);
        double acc = 0.0;
        for (size_t i = 0; i < gy.size(); ++i) {
          gv[i] += w[k] * gy[i];
          acc += gy[i] * v[i];
        }
        gw[k] += acc;
      }
    };
  }
  return y;
}

Tape::Var Tape::MaskedCrossEntropy(Var logits, std::span<const bool> allowed, int label, double weight) {
  const auto& lv = value(logits);
  if (allowed.size() != lv.size() || label < 0 || static_cast<size_t>(label) >= lv.size() || !allowed[label]) {
    throw Error(ErrorKind::kShapeMismatch, "cross-entropy label is out of range or masked");
  }
  std::vector<double> p = MaskedSoftmax(lv, allowed);
  const double loss = -weight * std::log(p[label]);
  const Var y = Push({loss});
  if (recording()) {
    nodes_[y].backward = [this, logits, label, weight, y, p = std::move(p)] {
      const double g = grad(y)[0] * weight;
      auto& gl = grad(logits);
      for (size_t i = 0; i < p.size(); ++i) gl[i] += g * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
    };
  }
  return y;
}

Tape::Var Tape::Sum(std::span<const Var> scalars) {
  double total = 0.0;
  for (Var s : scalars) total += value(s)[0];
  const Var y = Push({total});
  if (recording()) {
    nodes_[y].backward = [this, inputs = std::vector<Var>(scalars.begin(), scalars.end()), y] {
      const double g = grad(y)[0];
      for (Var s : inputs) grad(s)[0] += g;
    };
  }
  return y;
}

void Tape::Backward(Var root) {
  if (!recording()) throw Error(ErrorKind::kInvalidArgument, "tape was built without a gradient sink");
  if (size(root) != 1) throw Error(ErrorKind::kShapeMismatch, "Backward root must be a scalar");
  grad(root)[0] = 1.0;
  for (Var v = root; v >= 0; --v) {
    if (nodes_[v].backward) nodes_[v].backward();
  }
}

}  // namespace vsg
