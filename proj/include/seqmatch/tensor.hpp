#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Dense double-precision tensors (rank 1 or 2, row-major) plus a tape for
// reverse-mode differentiation. Operations live in ops.hpp as free functions;
// when a Tape is active and an input requires gradients, each op records a
// backward closure on it. Tensors are cheap handles sharing a node, so a
// parameter created once can participate in many forward passes while its
// gradient buffer accumulates across backward calls until zero_grad().

namespace seqmatch {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_str(const Shape& s);
Index shape_numel(const Shape& s);

// NaN/Inf detection on op results. Defaults to on in debug builds; tests and
// callers may toggle it explicitly.
bool finite_checks_enabled();
void set_finite_checks(bool on);

struct TensorNode {
  Shape shape;
  Eigen::ArrayXd value;
  Eigen::ArrayXd grad;  // size 0 until first accumulation
  bool requires_grad = false;

  Index numel() const { return value.size(); }
  Eigen::ArrayXd& ensure_grad() {
    if (grad.size() == 0) grad = Eigen::ArrayXd::Zero(value.size());
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape);
  static Tensor constant(const Shape& shape, double fill);
  static Tensor from_vector(const Shape& shape, std::vector<double> values);
  static Tensor from_rowmajor(const Shape& shape, const Eigen::ArrayXd& values);
  static Tensor from_matrix(const RowMat& m);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  Index dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  Index numel() const { return node_->numel(); }
  Index rows() const;  // rank-2 only
  Index cols() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    node_->requires_grad = on;
    return *this;
  }

  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }
  double operator[](Index i) const { return node_->value[i]; }
  double scalar_value() const;

  ConstMatMap mat() const;  // rank-2 view
  MatMap mat_mut();
  ConstVecMap vec() const { return ConstVecMap(node_->value.data(), node_->value.size()); }
  VecMap vec_mut() { return VecMap(node_->value.data(), node_->value.size()); }
  const Eigen::ArrayXd& array() const { return node_->value; }
  Eigen::ArrayXd& array_mut() { return node_->value; }

  bool has_grad() const { return node_->grad.size() > 0; }
  Tensor grad_tensor() const;  // copy; zeros when no gradient has arrived
  Eigen::ArrayXd& raw_grad() { return node_->ensure_grad(); }
  void zero_grad();
  void accumulate_grad(const Eigen::Ref<const Eigen::ArrayXd>& g);

  Tensor clone() const;  // deep value copy, gradient tracking off

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  static Tensor make(Shape shape, Eigen::ArrayXd values);
  std::shared_ptr<TensorNode> node_;
};

void check_finite(const Tensor& t, std::string_view what);

// Records backward closures in execution order. One backward per recording;
// a tape and the tensors recorded on it are confined to one thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }
  std::size_t num_entries() const { return entries_.size(); }
  bool backward_ran() const { return ran_; }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. The loss must
  // be a scalar; running twice without a fresh forward is an error.
  void backward(const Tensor& loss);

  static Tape* current();

  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

 private:
  std::vector<std::function<void()>> entries_;
  bool ran_ = false;
};

// Deterministic RNG: mt19937_64 core with hand-rolled transforms so that a
// seed reproduces identical streams regardless of standard-library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  double normal();                     // standard normal, Box-Muller
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)

  static std::uint64_t mix(std::uint64_t seed, std::string_view label);

 private:
  std::uint64_t splitmix();
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace seqmatch
