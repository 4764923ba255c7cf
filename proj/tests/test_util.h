// tests/test_util.h

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EEND_TESTS_TEST_UTIL_H_
#define EEND_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>

#include "eend/tensor.h"

namespace eend::testing {

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

inline Tensor random_labels(std::mt19937_64& rng, std::size_t frames,
                            std::size_t speakers, double p_active = 0.5) {
  std::bernoulli_distribution active(p_active);
  Tensor t({frames, speakers});
  for (double& v : t.data()) v = active(rng) ? 1.0 : 0.0;
  return t;
}

}  // namespace eend::testing

#endif  // EEND_TESTS_TEST_UTIL_H_
