#include "vdt/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vdt/errors.hpp"
#include "vdt/parallel.hpp"

namespace vdt {

namespace {

double permutation_cost(const CostMatrix& c, const std::vector<int>& perm) {
    double total = 0.0;
    for (int i = 0; i < c.n; ++i) total += c.at(i, perm[i]);
    return total;
}

// Kuhn-style augmenting search over the tight-edge graph that never displaces
// rows already fixed (rows < limit and the row `limit` itself).
bool reaugment(int row, int limit, const std::vector<std::vector<int>>& adj,
               std::vector<int>& match_row, std::vector<int>& match_col,
               std::vector<char>& visited) {
    for (int j : adj[row]) {
        if (visited[j]) continue;
        visited[j] = 1;
        const int owner = match_col[j];
        if (owner == -1 || (owner > limit && reaugment(owner, limit, adj, match_row, match_col, visited))) {
            match_row[row] = j;
            match_col[j] = row;
            return true;
        }
    }
    return false;
}

// Rewrites `perm` into the lexicographically smallest perfect matching of the
// zero-reduced-cost graph. Only exact zeros count as tight, which is the
// right notion for the degenerate (integer-valued) inputs where ties occur;
// generic real-valued instances have a unique optimum and take the fast path.
void lexicographic_tie_break(const CostMatrix& c, const std::vector<double>& u,
                             const std::vector<double>& v, std::vector<int>& perm) {
    const int n = c.n;
    std::vector<std::vector<int>> adj(n);
    size_t edge_count = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == perm[i] || (c.at(i, j) - u[i]) - v[j] == 0.0) adj[i].push_back(j);
        }
        edge_count += adj[i].size();
    }
    if (edge_count == static_cast<size_t>(n)) return;  // matching is forced

    std::vector<int> match_row = perm;
    std::vector<int> match_col(n, -1);
    for (int i = 0; i < n; ++i) match_col[match_row[i]] = i;

    std::vector<char> visited(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j : adj[i]) {
            if (match_row[i] == j) break;  // already the smallest feasible column
            const int displaced = match_col[j];
            if (displaced < i) continue;   // column already fixed to an earlier row
            const std::vector<int> saved_row = match_row;
            const std::vector<int> saved_col = match_col;
            match_col[match_row[i]] = -1;
            match_row[i] = j;
            match_col[j] = i;
            match_row[displaced] = -1;
            std::fill(visited.begin(), visited.end(), 0);
            visited[j] = 1;
            if (reaugment(displaced, i, adj, match_row, match_col, visited)) break;
            match_row = saved_row;
            match_col = saved_col;
        }
    }
    perm = match_row;
}

}  // namespace

void CostMatrix::validate() const {
    if (n <= 0) throw InputError("cost matrix: n must be positive");
    if (entries.size() != static_cast<size_t>(n) * n) {
        throw InputError("cost matrix: expected " + std::to_string(n) + "x" + std::to_string(n) +
                         " entries");
    }
    for (double e : entries) {
        if (!std::isfinite(e)) throw InputError("cost matrix: non-finite entry");
    }
}

namespace {

// Jonker-Volgenant shortest-augmenting-path solver: column reduction,
// two augmenting-row-reduction sweeps, then Dijkstra augmentation for the
// remaining free rows. Fills the row->column assignment and the column
// potentials v.
void solve_lapjv(int n, const double* cost, std::vector<int>& rowsol, std::vector<double>& v) {
    const double inf = std::numeric_limits<double>::infinity();
    rowsol.assign(n, -1);
    v.assign(n, 0.0);
    std::vector<int> colsol(n, -1);
    std::vector<int> matches(n, 0);
    std::vector<int> freelist(n);

    auto row = [&](int i) { return cost + static_cast<size_t>(i) * n; };

    // Column reduction (reverse column order).
    for (int j = n - 1; j >= 0; --j) {
        double min_cost = row(0)[j];
        int imin = 0;
        for (int i = 1; i < n; ++i) {
            if (row(i)[j] < min_cost) {
                min_cost = row(i)[j];
                imin = i;
            }
        }
        v[j] = min_cost;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        }
    }

    // Reduction transfer for rows assigned exactly once.
    int numfree = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            freelist[numfree++] = i;
        } else if (matches[i] == 1 && n > 1) {
            const int j1 = rowsol[i];
            double min_red = inf;
            for (int j = 0; j < n; ++j) {
                if (j != j1) min_red = std::min(min_red, row(i)[j] - v[j]);
            }
            v[j1] -= min_red;
        }
    }

    // Augmenting row reduction, two sweeps. Near-ties are treated as exact
    // ties: on real-valued costs the textbook strict comparison can cycle for
    // a very long time on sub-epsilon improvements. The guard only leaves v a
    // little less tight (v never increases here), so dual feasibility and the
    // exactness of the augmentation phase are unaffected.
    double scale = 0.0;
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(v[j]));
    const double near_tie = 1e-11 * (scale + 1.0);
    for (int sweep = 0; sweep < 2; ++sweep) {
        int k = 0;
        const int prevnumfree = numfree;
        numfree = 0;
        while (k < prevnumfree) {
            const int i = freelist[k++];
            double umin = row(i)[0] - v[0];
            int j1 = 0;
            double usubmin = inf;
            int j2 = -1;
            for (int j = 1; j < n; ++j) {
                const double h = row(i)[j] - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        j2 = j1;
                        umin = h;
                        j1 = j;
                    }
                }
            }
            int i0 = colsol[j1];
            const bool strictly_better = umin < usubmin - near_tie;
            if (strictly_better) {
                v[j1] -= usubmin - umin;
            } else if (i0 >= 0) {
                j1 = j2;
                i0 = colsol[j1];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 >= 0) {
                if (strictly_better) {
                    freelist[--k] = i0;  // reconsider immediately
                } else {
                    freelist[numfree++] = i0;
                }
            }
        }
    }

    // Augment the remaining free rows along shortest alternating paths.
    std::vector<double> d(n);
    std::vector<int> pred(n);
    std::vector<int> collist(n);
    for (int f = 0; f < numfree; ++f) {
        const int freerow = freelist[f];
        for (int j = 0; j < n; ++j) {
            d[j] = row(freerow)[j] - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        int low = 0, up = 0, last = -1;
        double min_d = 0.0;
        int endofpath = -1;
        for (;;) {
            if (up == low) {
                last = low - 1;
                min_d = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double h = d[j];
                    if (h <= min_d) {
                        if (h < min_d) {
                            up = low;
                            min_d = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k) {
                    if (colsol[collist[k]] < 0) {
                        endofpath = collist[k];
                        break;
                    }
                }
                if (endofpath >= 0) break;
            }
            const int j1 = collist[low++];
            const int i = colsol[j1];
            const double u1 = row(i)[j1] - v[j1] - min_d;
            for (int k = up; k < n; ++k) {
                const int j = collist[k];
                const double h = row(i)[j] - v[j] - u1;
                if (h < d[j]) {
                    d[j] = h;
                    pred[j] = i;
                    if (h == min_d) {
                        if (colsol[j] < 0) {
                            endofpath = j;
                            break;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
            }
            if (endofpath >= 0) break;
        }
        for (int k = 0; k <= last; ++k) {
            const int j1 = collist[k];
            v[j1] += d[j1] - min_d;
        }
        int j = endofpath;
        for (;;) {
            const int i = pred[j];
            colsol[j] = i;
            std::swap(j, rowsol[i]);
            if (i == freerow) break;
        }
    }
}

}  // namespace

Assignment hungarian_assign(const CostMatrix& cost) {
    cost.validate();
    const int n = cost.n;

    Assignment result;
    std::vector<double> v;
    solve_lapjv(n, cost.entries.data(), result.permutation, v);

    // Re-derive duals so every assigned edge has reduced cost exactly zero,
    // then resolve ties toward the lexicographically smallest optimum.
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = cost.at(i, result.permutation[i]) - v[result.permutation[i]];
    lexicographic_tie_break(cost, u, v, result.permutation);

    result.total_cost = permutation_cost(cost, result.permutation);
    return result;
}

Assignment brute_force_assign(const CostMatrix& cost) {
    cost.validate();
    if (cost.n > 9) throw InputError("brute_force_assign: n must be <= 9");
    std::vector<int> perm(cost.n);
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best;
    best.permutation = perm;
    best.total_cost = permutation_cost(cost, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
        const double c = permutation_cost(cost, perm);
        if (c < best.total_cost) {
            best.total_cost = c;
            best.permutation = perm;
        }
    }
    return best;
}

std::pair<double, Assignment> empirical_w2(const Points& a, const Points& b) {
    if (a.rows() != b.rows()) throw InputError("empirical_w2: point counts differ");
    if (a.cols() != b.cols()) throw InputError("empirical_w2: dimensions differ");
    if (a.rows() == 0) throw InputError("empirical_w2: empty point sets");

    const int n = static_cast<int>(a.rows());
    CostMatrix cost;
    cost.n = n;
    cost.entries.resize(static_cast<size_t>(n) * n);
    parallel_for_blocks(n, [&](std::ptrdiff_t, std::ptrdiff_t begin, std::ptrdiff_t end) {
        for (std::ptrdiff_t i = begin; i < end; ++i) {
            double* row = cost.entries.data() + i * n;
            for (int j = 0; j < n; ++j) {
                row[j] = (a.row(i) - b.row(j)).squaredNorm();
            }
        }
    }, 64);

    Assignment coupling = hungarian_assign(cost);
    const double dist = std::sqrt(coupling.total_cost / n);
    return {dist, std::move(coupling)};
}

}  // namespace vdt
