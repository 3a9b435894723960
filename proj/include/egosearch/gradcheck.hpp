#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "egosearch/nn/tensor.hpp"

namespace egosearch {

struct GradCheckEntry {
  std::string check;
  std::string tensor;
  double rel_error = 0.0;
};

struct GradCheckReport {
  int trials = 0;
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  const GradCheckEntry& worst() const;
};

// ||a - n|| / max(||a||, ||n||, floor). Tensors whose gradient norm is below
// the floor are compared in absolute terms.
double relative_error(const nn::Mat<double>& analytic, const nn::Mat<double>& numeric,
                      double floor = 1e-4);

// Finite-difference comparison of every learner primitive and of the
// composed critic + contrastive and actor + temperature losses, in double
// precision on random tiny shapes.
GradCheckReport run_gradcheck(int trials, std::uint64_t seed);

void print_gradcheck(std::ostream& out, const GradCheckReport& r);

}  // namespace egosearch
