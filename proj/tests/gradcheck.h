#pragma once

#include <gtest/gtest.h>

#include <string>

#include "finite_diff.h"

namespace chromap::testing {

// Expects every gradient entry to match its central difference within
// `tolerance`. Returns the worst ratio seen.
inline double check_gradients(const std::vector<Tensor64*>& inputs, const GraphFn& build, double tolerance,
                              double step = 1e-4, const std::string& label = "") {
  const auto comparisons = compare_gradients(inputs, build, step);
  for (const auto& c : comparisons) {
    EXPECT_LT(c.error, tolerance) << label << " input " << c.input << " entry " << c.entry << " analytic "
                                  << c.analytic << " numeric " << c.numeric;
  }
  return worst_error(comparisons);
}

}  // namespace chromap::testing
