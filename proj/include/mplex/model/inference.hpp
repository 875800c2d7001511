#pragma once

#include <numeric>
#include <vector>

#include "mplex/model/forward.hpp"

namespace mplex {

/// Plain-value outputs of a forward pass without corruption.
struct Inference {
  std::vector<DenseMatrix> local;
  std::vector<DenseMatrix> assignments;
  DenseMatrix attention;
  DenseMatrix consensus;
  DenseMatrix predictions;
};

template <typename T>
Inference infer(const Problem<T>& prob, const ModelParams<T>& params, SummaryMode mode) {
  ad::Tape<T> tape;
  const ParamVars<T> pv = bind(tape, params, false);
  std::vector<std::size_t> identity(prob.num_nodes);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  const std::vector<std::vector<std::size_t>> perms(prob.num_relations, identity);
  const ForwardState<T> st = forward(prob, pv, perms, mode);
  Inference out;
  for (std::size_t r = 0; r < prob.num_relations; ++r) {
    out.local.push_back(st.local[r].value().template cast<double>());
    out.assignments.push_back(st.assignments[r].value().template cast<double>());
  }
  out.attention = st.attention.weights.value().template cast<double>();
  out.consensus = params.consensus.template cast<double>();
  out.predictions = st.predictions.value().template cast<double>();
  return out;
}

} // namespace mplex
