#pragma once

#include <cmath>
#include <vector>

#include "dualsr/lab.hpp"
#include "dualsr/model.hpp"

namespace testutil {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// The three-spike instance used across the suite.
inline dualsr::Instance desk_instance() {
  return dualsr::make_instance(dualsr::SpikeTrain({0.25, 0.5, 0.8}, {1.0, 2.0, 1.5}),
                               dualsr::SamplingDesign::uniform(30),
                               dualsr::GaussianKernel(0.08));
}

/// Solved once and shared; the solve takes a few tenths of a second.
inline const dualsr::ReferenceSolution& desk_reference() {
  static const dualsr::ReferenceSolution ref =
      dualsr::solve_reference(desk_instance(), dualsr::ExchangeOptions{});
  return ref;
}

}  // namespace testutil
