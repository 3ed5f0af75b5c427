#pragma once

#include "gbn/core/types.hpp"

#include <array>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace gbn {

/// A named, persistent model weight. Lives outside any tape.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle into a ParamStore; stays valid when the store is copied.
struct ParamRef {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const { return index != static_cast<std::size_t>(-1); }
};

class ParamStore {
 public:
  ParamRef add(std::string name, Matrix value);

  Parameter& operator[](ParamRef ref) { return params_.at(ref.index); }
  const Parameter& operator[](ParamRef ref) const { return params_.at(ref.index); }

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

class Tape;

/// Lightweight handle to a value recorded on a Tape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool defined() const { return tape_ != nullptr; }

  const Matrix& value() const;
  const Matrix& grad() const;
  bool has_grad() const;
  bool requires_grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }
  Index size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode record of one forward pass. Nodes are appended in evaluation
/// order, so the vector is already a topological order; backward walks it in
/// reverse. Not copyable: tensors hold a pointer to their tape.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Non-differentiable input.
  Tensor constant(Matrix value);
  /// Differentiable input whose gradient is read back from the tape.
  Tensor leaf(Matrix value);
  /// Differentiable view of a stored parameter; backward accumulates into
  /// `store[ref].grad`.
  Tensor param(ParamStore& store, ParamRef ref);

  /// Records an op result. `backward` is dropped when no input needs grads.
  Tensor record(Matrix value, bool requires_grad, BackwardFn backward);

  /// Seeds d(root)/d(root) = 1 and propagates to every reachable node.
  void backward(const Tensor& root);
  /// Clears node gradients (parameter gradients are left untouched) so that
  /// backward can run again from another root on the same tape.
  void zero_grad();

  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const Matrix& grad(std::size_t id) const { return nodes_.at(id).grad; }
  bool has_grad(std::size_t id) const { return nodes_.at(id).grad.size() != 0; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient slot for accumulation, allocated as zeros on first use.
  Matrix& grad_slot(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    ParamStore* store = nullptr;
    ParamRef param;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Tensor::value() const { return tape_->value(id_); }
inline const Matrix& Tensor::grad() const { return tape_->grad(id_); }
inline bool Tensor::has_grad() const { return tape_->has_grad(id_); }
inline bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace gbn
