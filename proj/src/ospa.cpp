#include "glmbim/ospa.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace glmbim {

// Jonker-Volgenant style shortest augmenting path on a dense matrix.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    const int m = static_cast<int>(cost[0].size());
    if (m < n) throw std::invalid_argument("min_cost_assignment: needs n_rows <= n_cols");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(m) + 1, 0);  // 1-based; match[col] = row
    std::vector<int> way(static_cast<size_t>(m) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(m) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = match[static_cast<size_t>(j0)];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> assignment(static_cast<size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (match[static_cast<size_t>(j)] > 0) assignment[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
    return assignment;
}

OspaResult ospa(const std::vector<Vector2d>& estimated, const std::vector<Vector2d>& truth,
                const OspaParams& params) {
    if (params.cutoff_c <= 0.0 || params.order_p < 1.0) throw std::invalid_argument("ospa: bad parameters");
    const auto& small = estimated.size() <= truth.size() ? estimated : truth;
    const auto& large = estimated.size() <= truth.size() ? truth : estimated;
    const size_t m = small.size();
    const size_t n = large.size();
    if (n == 0) return {};

    const double c = params.cutoff_c;
    const double p = params.order_p;
    const double cp = std::pow(c, p);

    double loc_sum = 0.0;
    if (m > 0) {
        std::vector<std::vector<double>> cost(m, std::vector<double>(n));
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j)
                cost[i][j] = std::pow(std::min(c, (small[i] - large[j]).norm()), p);
        const auto assignment = min_cost_assignment(cost);
        for (size_t i = 0; i < m; ++i) loc_sum += cost[i][static_cast<size_t>(assignment[i])];
    }
    const double card_sum = cp * static_cast<double>(n - m);

    OspaResult r;
    r.total = std::pow((loc_sum + card_sum) / static_cast<double>(n), 1.0 / p);
    r.loc = std::pow(loc_sum / static_cast<double>(n), 1.0 / p);
    r.card = std::pow(card_sum / static_cast<double>(n), 1.0 / p);
    return r;
}

}  // namespace glmbim
