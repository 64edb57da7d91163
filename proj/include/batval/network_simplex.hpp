#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace batval {

/// Primal network simplex for min-cost flow with real-valued data.
///
/// Arcs have lower bound zero and a capacity (use `kInfinite` for none).
/// Supplies must sum to zero. The spanning-tree basis survives between calls
/// to `solve()` as long as only costs change, so a sequence of re-priced
/// problems on one network warm-starts from the previous optimum. Changing a
/// supply, or a capacity below the current flow, discards the basis.
///
/// The basis is kept strongly feasible (Cunningham's leaving-arc rule), which
/// rules out cycling under degeneracy.
class NetworkSimplex {
public:
    enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

    static constexpr double kInfinite = 1e300;

    explicit NetworkSimplex(int node_count);

    int add_arc(int source, int target, double capacity, double cost);
    void set_supply(int node, double supply);
    void set_cost(int arc, double cost);
    void set_capacity(int arc, double capacity);

    Status solve();

    [[nodiscard]] double flow(int arc) const { return flow_.at(static_cast<std::size_t>(arc)); }
    [[nodiscard]] double cost(int arc) const { return cost_.at(static_cast<std::size_t>(arc)); }
    [[nodiscard]] double total_cost() const;
    [[nodiscard]] int node_count() const { return node_count_; }
    [[nodiscard]] int arc_count() const { return arc_count_; }
    /// Pivots performed by the most recent solve.
    [[nodiscard]] std::size_t last_pivots() const { return last_pivots_; }
    [[nodiscard]] bool warm() const { return basis_valid_; }

    /// Drops the basis; the next solve starts from the artificial tree.
    void reset() { basis_valid_ = false; }

private:
    enum : std::int8_t { kTree = 0, kLower = 1, kUpper = -1 };
    enum : std::int8_t { kUp = 1, kDown = -1 };

    void build_initial_basis();
    void refresh_artificial_costs();
    void recompute_potentials(int subtree_root);
    bool find_entering(int& arc);
    bool pivot(int entering);
    int find_join(int u, int v) const;
    void unlink_child(int node);
    void link_child(int node, int parent);

    int node_count_ = 0;
    int arc_count_ = 0;  // real arcs; artificial arcs follow
    int root_ = 0;

    std::vector<int> source_, target_;
    std::vector<double> cap_, cost_, flow_;
    std::vector<std::int8_t> state_;
    std::vector<double> supply_;

    std::vector<int> parent_, pred_, depth_;
    std::vector<std::int8_t> dir_;
    std::vector<double> pi_;
    std::vector<int> first_child_, next_sibling_, prev_sibling_;

    std::vector<int> path_, dfs_stack_;
    std::size_t block_start_ = 0;
    double eps_ = 0.0;
    bool basis_valid_ = false;
    std::size_t last_pivots_ = 0;
};

}  // namespace batval
