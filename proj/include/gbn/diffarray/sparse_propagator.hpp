#pragma once

#include "gbn/core/types.hpp"

#include <memory>
#include <vector>

namespace gbn {

enum class PropagatorTag { Adjacency, DinvU, DinvV, GcnShift, Generic };

/// Constant sparse operator applied on the left of node-feature matrices.
/// The matrix is shared and immutable, so tapes can hold on to it cheaply.
struct SparsePropagator {
  std::shared_ptr<const SparseMatrix> data;
  PropagatorTag tag = PropagatorTag::Generic;
  bool symmetric = false;

  const SparseMatrix& matrix() const { return *data; }
  Index rows() const { return data ? data->rows() : 0; }
  Index cols() const { return data ? data->cols() : 0; }

  Matrix dense() const { return Matrix(*data); }
  bool all_finite() const;
};

SparsePropagator make_propagator(SparseMatrix matrix, PropagatorTag tag = PropagatorTag::Generic,
                                 bool symmetric = false);

SparsePropagator make_propagator(Index rows, Index cols, const std::vector<Triplet>& entries,
                                 PropagatorTag tag = PropagatorTag::Generic, bool symmetric = false);

}  // namespace gbn
