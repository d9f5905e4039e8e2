// Copyright 2026 The OSCARS Authors.
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

#ifndef OSCARS_SYNTH_H_
#define OSCARS_SYNTH_H_

#include <cstdint>

#include "oscars/core_data.h"

namespace oscars {

// Seeded Gaussian-mixture fixture. Every class has `modes` sub-modes; mode 0
// is the clean one and mode j sits j * mode_step away from it in its own
// random direction. Internal records come from mode 0 only; external and
// query records come from all modes.
struct SynthConfig {
  int classes = 3;
  int modes = 3;
  int dim = 32;
  int internal_per_class = 60;
  int external_per_mode = 60;
  int queries_per_mode = 10;
  double class_spread = 1.5;  // per-coordinate std of class centres
  double mode_step = 4.0;
  double noise = 1.0;
  // Probability that a record also carries one extra random class label.
  double multi_label_rate = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset synthesize(const SynthConfig& config);

}  // namespace oscars

#endif  // OSCARS_SYNTH_H_
