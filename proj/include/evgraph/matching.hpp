// Copyright 2026 The EventGraph Authors.
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

#pragma once

#include <cstddef>
#include <vector>

namespace evgraph {

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double total_cost = 0.0;
};

// Minimum-cost injective assignment of every row of an (n, m) cost matrix,
// n <= m, to a distinct column (Hungarian algorithm with potentials,
// O(n^2 m)). Throws CapacityError when n > m.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

}  // namespace evgraph
