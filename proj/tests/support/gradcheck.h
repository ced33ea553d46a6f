// Copyright 2026 The evlink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVLINK_TESTS_SUPPORT_GRADCHECK_H_
#define EVLINK_TESTS_SUPPORT_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "evlink/encoders.h"

namespace evlink::testing {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "block[index]"
  size_t checked = 0;
};

// Compares analytic gradients with central differences of loss() over every
// parameter of every block. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult CheckGradients(std::span<const ParamBlock> blocks,
                                      const GradBuffer &analytic,
                                      const std::function<double()> &loss,
                                      double step = 1e-5, double floor = 1e-6) {
  GradCheckResult result;
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    for (size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss();
      values[i] = saved - step;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[b][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = blocks[b].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace evlink::testing

#endif  // EVLINK_TESTS_SUPPORT_GRADCHECK_H_
