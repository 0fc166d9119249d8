#pragma once

#include <vector>

#include "glmbim/gaussian.hpp"

namespace glmbim {

struct OspaParams {
    double cutoff_c = 20.0;  // pixels
    double order_p = 1.0;
};

struct OspaResult {
    double total = 0.0;
    double loc = 0.0;
    double card = 0.0;
};

// Optimal subpattern assignment distance between two position sets, with the
// standard localization/cardinality decomposition (total^p = loc^p + card^p).
// Assignment solved exactly. Both sets empty -> (0,0,0).
OspaResult ospa(const std::vector<Vector2d>& estimated, const std::vector<Vector2d>& truth,
                const OspaParams& params);

// Min-cost assignment of all rows (n_rows <= n_cols) via shortest augmenting
// paths; returns assignment[row] = col.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace glmbim
