#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace barytrans {

/// One basic arc of a transportation tree solution.
struct TransportArc {
    int row;
    int col;
    double flow;
};

struct TransportSolveInfo {
    double objective = 0.0;
    long pivots = 0;
    bool optimal = false;
};

/// Tree-based simplex for the transportation polytope
///     Pi(a, b) = { x >= 0 : sum_j x_ij = a_i, sum_i x_ij = b_j }.
///
/// Degeneracy is handled by the classical symbolic perturbation
/// a_i -> a_i + eps, b_last -> b_last + n*eps carried as an exact integer
/// epsilon coefficient next to each flow, which makes every basic solution
/// lexicographically nondegenerate and rules out cycling. The basis persists
/// between solve() calls, so re-solves with a new cost function warm-start
/// from the previous optimal tree. Pivots update the spanning tree
/// incrementally: the subtree cut off by the leaving arc is re-hung on the
/// entering arc and its potentials are shifted by the entering reduced cost.
class TransportSimplex {
public:
    TransportSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
        : n_(static_cast<int>(a.size())), m_(static_cast<int>(b.size())), a_(a), b_(b) {
        if (n_ < 1 || m_ < 1) throw std::invalid_argument("transport: empty marginal");
        if ((a.array() <= 0).any() || (b.array() <= 0).any())
            throw std::invalid_argument("transport: weights must be positive");
        if (std::abs(a.sum() - b.sum()) > 1e-9 * (1.0 + std::abs(a.sum())))
            throw std::invalid_argument("transport: marginal sums differ");
        northwest_init();
    }

    /// Minimizes sum_ij cost(i,j) x_ij. CostFn: double(int i, int j).
    ///
    /// Pricing keeps a candidate list of negative-reduced-cost arcs found by
    /// block scans; candidates are re-verified against the current potentials
    /// before pivoting, so full matrix scans are amortized over many pivots.
    template <class CostFn>
    TransportSolveInfo solve(const CostFn& cost, double rcTol = 1e-10, long maxPivots = -1) {
        TransportSolveInfo info;
        if (orderStale_) {
            rebuild_order();
            orderStale_ = false;
        }
        compute_potentials(cost);
        const long budget = maxPivots > 0 ? maxPivots : 10000L + 40L * static_cast<long>(n_) * m_;

        const long total = static_cast<long>(n_) * m_;
        const long block = std::min<long>(total, 16384);
        const std::size_t maxCandidates = 64;
        long cursor = 0;
        double costScale = 1.0;
        std::vector<std::pair<double, long>> candidates;  // (rc, flat index)

        while (true) {
            while (!candidates.empty()) {
                std::size_t bestK = 0;
                double best = 0.0;
                for (std::size_t k = 0; k < candidates.size(); ++k) {
                    const long idx = candidates[k].second;
                    const int i = static_cast<int>(idx / m_);
                    const int j = static_cast<int>(idx % m_);
                    const double rc = cost(i, j) - pot_[i] - pot_[n_ + j];
                    candidates[k].first = rc;
                    if (rc < best) { best = rc; bestK = k; }
                }
                if (best >= -rcTol * costScale) {
                    candidates.clear();
                    break;
                }
                const long idx = candidates[bestK].second;
                candidates[bestK] = candidates.back();
                candidates.pop_back();
                if (++info.pivots > budget) return info;  // explicit failure, caller decides
                pivot(static_cast<int>(idx / m_), static_cast<int>(idx % m_), cost);
            }

            long cleanScanned = 0;
            while (cleanScanned < total && candidates.size() < maxCandidates) {
                long scanned = 0;
                while (scanned < block && cleanScanned + scanned < total &&
                       candidates.size() < maxCandidates) {
                    const long idx = (cursor + scanned) % total;
                    const int i = static_cast<int>(idx / m_);
                    const int j = static_cast<int>(idx % m_);
                    const double c = cost(i, j);
                    const double ca = std::abs(c);
                    if (ca > costScale) costScale = ca;
                    const double rc = c - pot_[i] - pot_[n_ + j];
                    if (rc < -rcTol * costScale) candidates.emplace_back(rc, idx);
                    ++scanned;
                }
                cursor = (cursor + scanned) % total;
                cleanScanned += scanned;
                if (!candidates.empty()) break;
            }
            if (candidates.empty() && cleanScanned >= total) break;  // optimal
        }
        refresh_flows();
        info.optimal = true;
        info.objective = objective(cost);
        return info;
    }

    template <class CostFn>
    double objective(const CostFn& cost) const {
        double v = 0.0;
        for (const BasisArc& arc : arcs_) v += cost(arc.i, arc.j) * arc.val;
        return v;
    }

    /// Basic arcs with exact flows (clamped at zero), at most n+m-1 of them.
    std::vector<TransportArc> vertex() const {
        std::vector<TransportArc> out;
        out.reserve(arcs_.size());
        for (const BasisArc& arc : arcs_) out.push_back({arc.i, arc.j, std::max(arc.val, 0.0)});
        return out;
    }

    Eigen::MatrixXd plan() const {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_, m_);
        for (const BasisArc& arc : arcs_) p(arc.i, arc.j) = std::max(arc.val, 0.0);
        return p;
    }

private:
    struct BasisArc {
        int i, j;
        double val;  // real flow part
        int eps;     // integer coefficient of the symbolic perturbation
    };

    static bool lex_less(double v1, int e1, double v2, int e2, double tol) {
        if (v1 < v2 - tol) return true;
        if (v1 > v2 + tol) return false;
        return e1 < e2;
    }

    void northwest_init() {
        arcs_.clear();
        arcs_.reserve(n_ + m_ - 1);
        int i = 0, j = 0;
        double sa = a_(0);
        int ea = 1;
        double sb = b_(0);
        int eb = (m_ == 1) ? n_ : 0;
        const double tol = 1e-15;
        while (true) {
            if (i == n_ - 1 && j == m_ - 1) {
                arcs_.push_back({i, j, sa, ea});
                break;
            }
            if (lex_less(sa, ea, sb, eb, tol)) {
                arcs_.push_back({i, j, sa, ea});
                sb -= sa;
                eb -= ea;
                ++i;
                sa = a_(i);
                ea = 1;
            } else {
                arcs_.push_back({i, j, sb, eb});
                sa -= sb;
                ea -= eb;
                ++j;
                sb = b_(j);
                eb = (j == m_ - 1) ? n_ : 0;
            }
        }
        rebuild_tree();
    }

    // node ids: rows 0..n-1, cols n..n+m-1; tree rooted at node 0
    void rebuild_tree() {
        const int N = n_ + m_;
        adj_.assign(N, {});
        for (int k = 0; k < static_cast<int>(arcs_.size()); ++k) {
            adj_[arcs_[k].i].push_back(k);
            adj_[n_ + arcs_[k].j].push_back(k);
        }
        parent_.assign(N, -1);
        parentArc_.assign(N, -1);
        depth_.assign(N, 0);
        order_.clear();
        order_.reserve(N);
        order_.push_back(0);
        std::vector<bool> seen(N, false);
        seen[0] = true;
        for (std::size_t q = 0; q < order_.size(); ++q) {
            const int x = order_[q];
            for (int k : adj_[x]) {
                const int y = other_end(k, x);
                if (!seen[y]) {
                    seen[y] = true;
                    parent_[y] = x;
                    parentArc_[y] = k;
                    depth_[y] = depth_[x] + 1;
                    order_.push_back(y);
                }
            }
        }
        if (static_cast<int>(order_.size()) != N)
            throw std::logic_error("transport: basis is not a spanning tree");
    }

    int other_end(int arc, int node) const {
        return arcs_[arc].i == node ? n_ + arcs_[arc].j : arcs_[arc].i;
    }

    template <class CostFn>
    void compute_potentials(const CostFn& cost) {
        pot_.assign(n_ + m_, 0.0);
        for (std::size_t q = 1; q < order_.size(); ++q) {
            const int x = order_[q];
            const BasisArc& arc = arcs_[parentArc_[x]];
            const double c = cost(arc.i, arc.j);
            if (x == arc.i)
                pot_[x] = c - pot_[n_ + arc.j];
            else
                pot_[x] = c - pot_[arc.i];
        }
    }

    template <class CostFn>
    void pivot(int ei, int ej, const CostFn& cost) {
        const int u = ei;          // row endpoint of the entering arc
        const int v = n_ + ej;     // col endpoint
        const double rcEnter = cost(ei, ej) - pot_[u] - pot_[v];

        // cycle = entering arc + tree path from v back to u
        int x = v, y = u;
        pathU_.clear();
        pathV_.clear();
        while (depth_[x] > depth_[y]) { pathU_.push_back(parentArc_[x]); x = parent_[x]; }
        while (depth_[y] > depth_[x]) { pathV_.push_back(parentArc_[y]); y = parent_[y]; }
        while (x != y) {
            pathU_.push_back(parentArc_[x]); x = parent_[x];
            pathV_.push_back(parentArc_[y]); y = parent_[y];
        }
        cycle_.clear();
        for (int k : pathU_) cycle_.push_back(k);
        for (int t = static_cast<int>(pathV_.size()) - 1; t >= 0; --t)
            cycle_.push_back(pathV_[t]);

        // min lexicographic ratio over the arcs losing flow (even positions)
        double thVal = 0.0;
        int thEps = 0;
        int leave = -1;
        bool first = true;
        const double tieTol = 1e-13;
        for (std::size_t p = 0; p < cycle_.size(); p += 2) {
            const BasisArc& arc = arcs_[cycle_[p]];
            if (first || lex_less(arc.val, arc.eps, thVal, thEps, tieTol)) {
                thVal = arc.val;
                thEps = arc.eps;
                leave = cycle_[p];
                first = false;
            }
        }
        if (leave < 0) throw std::logic_error("transport: no leaving arc");

        for (std::size_t p = 0; p < cycle_.size(); ++p) {
            BasisArc& arc = arcs_[cycle_[p]];
            if (p % 2 == 0) { arc.val -= thVal; arc.eps -= thEps; }
            else           { arc.val += thVal; arc.eps += thEps; }
        }

        // child endpoint of the leaving arc: the one whose parent arc it is
        const int li = arcs_[leave].i, ljn = n_ + arcs_[leave].j;
        const int cut = (parentArc_[li] == leave) ? li : ljn;

        // detach leaving arc from the adjacency, enumerate the cut subtree
        detach(li, leave);
        detach(ljn, leave);
        subtree_.clear();
        subtree_.push_back(cut);
        inSubtree_.assign(n_ + m_, false);
        inSubtree_[cut] = true;
        for (std::size_t q = 0; q < subtree_.size(); ++q) {
            const int w = subtree_[q];
            for (int k : adj_[w]) {
                const int z = other_end(k, w);
                if (!inSubtree_[z]) {
                    inSubtree_[z] = true;
                    subtree_.push_back(z);
                }
            }
        }

        // install the entering arc in the leaving slot
        arcs_[leave] = {ei, ej, thVal, thEps};
        adj_[u].push_back(leave);
        adj_[v].push_back(leave);

        // re-hang: reverse parent pointers from the subtree endpoint of the
        // entering arc up to the old subtree root `cut`
        const int b0 = inSubtree_[u] ? u : v;
        const int a0 = inSubtree_[u] ? v : u;
        int w = b0;
        int newParent = a0;
        int newParentArc = leave;
        while (true) {
            const int oldParent = parent_[w];
            const int oldArc = parentArc_[w];
            parent_[w] = newParent;
            parentArc_[w] = newParentArc;
            if (w == cut) break;
            newParent = w;
            newParentArc = oldArc;
            w = oldParent;
        }
        // depths for the re-hung subtree (BFS from b0)
        depth_[b0] = depth_[a0] + 1;
        bfs_.clear();
        bfs_.push_back(b0);
        for (std::size_t q = 0; q < bfs_.size(); ++q) {
            const int node = bfs_[q];
            for (int k : adj_[node]) {
                const int z = other_end(k, node);
                if (inSubtree_[z] && parent_[z] == node && parentArc_[z] == k) {
                    depth_[z] = depth_[node] + 1;
                    bfs_.push_back(z);
                }
            }
        }

        // potentials: the cut subtree shifts by the entering reduced cost,
        // rows and cols in opposite directions
        const double rowShift = inSubtree_[u] ? rcEnter : -rcEnter;
        for (int node : subtree_)
            pot_[node] += (node < n_) ? rowShift : -rowShift;

        orderStale_ = true;
    }

    void detach(int node, int arc) {
        auto& lst = adj_[node];
        for (std::size_t k = 0; k < lst.size(); ++k) {
            if (lst[k] == arc) {
                lst[k] = lst.back();
                lst.pop_back();
                return;
            }
        }
    }

    /// Recomputes flows exactly from the tree and the unperturbed marginals.
    void refresh_flows() {
        if (orderStale_) {
            rebuild_order();
            orderStale_ = false;
        }
        std::vector<double> residual(n_ + m_);
        for (int i = 0; i < n_; ++i) residual[i] = a_(i);
        for (int j = 0; j < m_; ++j) residual[n_ + j] = b_(j);
        for (int q = static_cast<int>(order_.size()) - 1; q >= 1; --q) {
            const int x = order_[q];
            BasisArc& arc = arcs_[parentArc_[x]];
            arc.val = residual[x];
            residual[parent_[x]] -= residual[x];
        }
    }

    void rebuild_order() {
        const int N = n_ + m_;
        order_.clear();
        order_.reserve(N);
        order_.push_back(0);
        std::vector<bool> seen(N, false);
        seen[0] = true;
        for (std::size_t q = 0; q < order_.size(); ++q) {
            const int node = order_[q];
            for (int k : adj_[node]) {
                const int z = other_end(k, node);
                if (!seen[z] && parent_[z] == node) {
                    seen[z] = true;
                    order_.push_back(z);
                }
            }
        }
        if (static_cast<int>(order_.size()) != N)
            throw std::logic_error("transport: tree order rebuild failed");
    }

    int n_, m_;
    Eigen::VectorXd a_, b_;
    std::vector<BasisArc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> parent_, parentArc_, depth_, order_;
    std::vector<double> pot_;
    std::vector<int> pathU_, pathV_, cycle_, subtree_, bfs_;
    std::vector<bool> inSubtree_;
    bool orderStale_ = false;
};

/// Linear-minimization oracle over Pi(a, b): returns a minimizing vertex of
/// <cost, pi> as a dense plan. Vertices carry at most n+m-1 nonzeros.
inline Eigen::MatrixXd ot_lmo(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b, double* objective = nullptr) {
    TransportSimplex ts(a, b);
    auto info = ts.solve([&](int i, int j) { return cost(i, j); });
    if (!info.optimal) throw std::runtime_error("ot_lmo: pivot budget exhausted");
    if (objective) *objective = info.objective;
    return ts.plan();
}

}  // namespace barytrans
