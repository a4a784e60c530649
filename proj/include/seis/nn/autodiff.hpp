#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace seis::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
/// true = position may be attended / selected.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Named dense tensors; the model's trainable state.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value);
  std::size_t size() const { return values_.size(); }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::size_t index(const std::string& name) const;
  std::size_t scalar_count() const;

  /// Zero-valued tensors shaped like the parameters.
  std::vector<Matrix> zeros() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

using Gradients = std::vector<Matrix>;

void add_into(Gradients& acc, const Gradients& g);
double global_norm(const Gradients& g);
void scale(Gradients& g, double factor);

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records operations for one forward pass. With recording disabled no backward closures
/// are kept, which is the inference mode.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Matrix value);
  Var parameter(const ParameterSet& params, std::size_t index);
  Var push(Matrix value, Backward backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  Matrix& grad(int id);
  bool recording() const { return record_; }

  /// Seeds d(output)/d(output) = 1 for a 1x1 output and accumulates parameter gradients.
  void backward(const Var& output, Gradients& grads);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    long param = -1;
  };
  std::vector<Node> nodes_;
  bool record_;
};

// Differentiable operations.
Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds a 1xC row to every row of a.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var hadamard(const Var& a, const Var& b);
Var tanh(const Var& a);
Var gelu(const Var& a);
Var square(const Var& a);
Var sum(const Var& a);
Var mean_rows(const Var& a);
/// Mean over rows where keep(i) is true; zero row when none are kept.
Var masked_mean_rows(const Var& a, const std::vector<bool>& keep);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_cols(const std::vector<Var>& parts);
Var element(const Var& a, Eigen::Index r, Eigen::Index c);
/// Row-normalizes to zero mean, unit variance, then gain and bias (1xC each).
Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);
/// Row-wise softmax; masked entries get exactly zero weight, fully masked rows are zero.
Var masked_softmax_rows(const Var& a, const Mask& mask);
/// Log-probabilities of one categorical distribution over every unmasked entry of a.
/// Masked entries hold 0 and receive no gradient.
Var masked_log_softmax(const Var& a, const Mask& mask);
/// Entropy of the categorical defined by masked_log_softmax(a, mask).
Var masked_entropy(const Var& a, const Mask& mask);
/// PPO clipped surrogate min(r A, clip(r, 1-eps, 1+eps) A) with r = exp(logp - old_logp).
Var clipped_surrogate(const Var& logp, double old_logp, double advantage, double eps);

/// Inference-side helper matching masked_softmax_rows.
Matrix masked_softmax(const Matrix& scores, const Mask& mask);

}  // namespace seis::nn
