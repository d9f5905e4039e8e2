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

#ifndef OSCARS_SAMPLER_H_
#define OSCARS_SAMPLER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oscars/core_data.h"

namespace oscars {

// (anchor, positive, intra-class negative, inter-class negative) record ids.
struct Quadruplet {
  std::string anchor;
  std::string positive;
  std::string intra_negative;
  std::string inter_negative;

  friend bool operator==(const Quadruplet&, const Quadruplet&) = default;
};

enum class AnchorSet { kAllExternal, kClassBalanced };

AnchorSet parse_anchor_set(std::string_view text);

struct SamplerConfig {
  std::uint64_t seed = 42;
  int quadruplets_per_anchor = 1;
  // kClassBalanced draws, for every class, as many anchors (grouped by
  // their first vocabulary-ordered label) as the smallest class has.
  AnchorSet anchor_set = AnchorSet::kAllExternal;
};

struct SampleReport {
  std::vector<Quadruplet> quadruplets;
  std::size_t anchors_considered = 0;
  // Anchors with no valid (positive, intra negative, inter negative).
  std::vector<std::string> skipped_anchors;
};

// Draws quadruplets from the binned external records of `store`. A shared
// class is drawn uniformly among the anchor's labels that admit a complete
// quadruplet; positives share the anchor's bin in that class, intra
// negatives sit in another bin of it, inter negatives share no label.
// Each anchor uses its own generator seeded from seed ^ hash(anchor id).
SampleReport sample_quadruplets(const Dataset& store, const SamplerConfig& config);

struct Violation {
  std::size_t index = 0;  // position in the quadruplet list
  std::string reason;
};

// Checks every tuple against the membership rules. Throws DataError if an
// id does not resolve.
std::vector<Violation> validate_quadruplets(const Dataset& store,
                                            const std::vector<Quadruplet>& quadruplets);

// One `anchor_id, positive_id, intra_negative_id, inter_negative_id` line
// per tuple.
std::string format_quadruplets(const std::vector<Quadruplet>& quadruplets);
std::vector<Quadruplet> parse_quadruplets(std::string_view text);

}  // namespace oscars

#endif  // OSCARS_SAMPLER_H_
