#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

namespace mlt {

/// Cost at or above this marks a forbidden pairing; forced picks are dropped
/// from the returned assignment.
inline constexpr double kForbiddenCost = 1e12;

/// Minimum-cost bipartite assignment via shortest augmenting paths with dual
/// potentials. Rectangular matrices are handled by matching the smaller side
/// completely. Returns, per row, the assigned column or -1; pairings that hit
/// a forbidden entry are reported as -1.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int rows = static_cast<int>(cost.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(cost[0].size());
    for (const auto& r : cost)
        if (static_cast<int>(r.size()) != cols)
            throw std::invalid_argument("solve_assignment: ragged cost matrix");
    if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

    if (rows > cols) {  // transpose so the row side is the smaller one
        std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t[j][i] = cost[i][j];
        const auto col_to_row = solve_assignment(t);
        std::vector<int> row_to_col(rows, -1);
        for (int j = 0; j < cols; ++j)
            if (col_to_row[j] != -1) row_to_col[col_to_row[j]] = j;
        return row_to_col;
    }

    const int n = rows, m = cols;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> match(m + 1, n);  // column -> row, n meaning free
    std::vector<int> way(m + 1, m);
    for (int i = 0; i < n; ++i) {
        match[m] = i;
        int j0 = m;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 0; j < m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != n);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != m);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < m; ++j)
        if (match[j] != n && cost[match[j]][j] < kForbiddenCost) row_to_col[match[j]] = j;
    return row_to_col;
}

}  // namespace mlt
