#include "gbn/diffarray/tape.hpp"

#include <stdexcept>

namespace gbn {

ParamRef ParamStore::add(std::string name, Matrix value) {
  Parameter p{std::move(name), std::move(value), Matrix{}};
  p.zero_grad();
  params_.push_back(std::move(p));
  return ParamRef{params_.size() - 1};
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Tensor Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix{}, false, nullptr, nullptr, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix{}, true, nullptr, nullptr, {}});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::param(ParamStore& store, ParamRef ref) {
  nodes_.push_back(Node{store[ref].value, Matrix{}, true, nullptr, &store, ref});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, bool requires_grad, BackwardFn backward) {
  Node node{std::move(value), Matrix{}, requires_grad, nullptr, nullptr, {}};
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.resize(0, 0);
}

void Tape::backward(const Tensor& root) {
  if (&root.tape() != this) throw std::invalid_argument("backward: tensor belongs to another tape");
  const Matrix& v = root.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError("backward: root must be scalar, got " + shape_string(v));
  }
  grad_slot(root.id()).setOnes();
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward(*this, i);
    } else if (n.store != nullptr) {
      (*n.store)[n.param].grad += n.grad;
    }
  }
}

}  // namespace gbn
