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

#ifndef OSCARS_PARALLEL_H_
#define OSCARS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace oscars {

// Worker cap: OSCARS_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t thread_budget();

// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write results
// into per-index slots, so output never depends on scheduling. The first
// exception by index is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace oscars

#endif  // OSCARS_PARALLEL_H_
