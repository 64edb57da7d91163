#include "batval/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace batval {

NetworkSimplex::NetworkSimplex(int node_count) : node_count_(node_count), root_(node_count) {
    if (node_count < 1) throw std::invalid_argument("network needs at least one node");
    supply_.assign(static_cast<std::size_t>(node_count), 0.0);
}

int NetworkSimplex::add_arc(int source, int target, double capacity, double cost) {
    if (source < 0 || source >= node_count_ || target < 0 || target >= node_count_) {
        throw std::out_of_range("arc endpoint out of range");
    }
    if (!(capacity >= 0.0)) throw std::invalid_argument("arc capacity must be non-negative");
    basis_valid_ = false;
    // Artificial arcs from an earlier solve sit past the real ones.
    const auto m = static_cast<std::size_t>(arc_count_);
    source_.resize(m);
    target_.resize(m);
    cap_.resize(m);
    cost_.resize(m);
    source_.push_back(source);
    target_.push_back(target);
    cap_.push_back(capacity);
    cost_.push_back(cost);
    return arc_count_++;
}

void NetworkSimplex::set_supply(int node, double supply) {
    auto& s = supply_.at(static_cast<std::size_t>(node));
    if (s != supply) basis_valid_ = false;
    s = supply;
}

void NetworkSimplex::set_cost(int arc, double cost) {
    cost_.at(static_cast<std::size_t>(arc)) = cost;
}

void NetworkSimplex::set_capacity(int arc, double capacity) {
    if (!(capacity >= 0.0)) throw std::invalid_argument("arc capacity must be non-negative");
    const auto a = static_cast<std::size_t>(arc);
    if (cap_.at(a) == capacity) return;
    if (basis_valid_) {
        // Lower-bound arcs and tree arcs inside the new bound keep the basis.
        const bool keeps = state_[a] == kLower || (state_[a] == kTree && flow_[a] <= capacity);
        if (!keeps) basis_valid_ = false;
    }
    cap_[a] = capacity;
}

double NetworkSimplex::total_cost() const {
    double total = 0.0;
    for (int a = 0; a < arc_count_; ++a) {
        total += cost_[static_cast<std::size_t>(a)] * flow_[static_cast<std::size_t>(a)];
    }
    return total;
}

void NetworkSimplex::unlink_child(int node) {
    const auto n = static_cast<std::size_t>(node);
    const int prev = prev_sibling_[n];
    const int next = next_sibling_[n];
    if (prev >= 0) next_sibling_[static_cast<std::size_t>(prev)] = next;
    else first_child_[static_cast<std::size_t>(parent_[n])] = next;
    if (next >= 0) prev_sibling_[static_cast<std::size_t>(next)] = prev;
    prev_sibling_[n] = next_sibling_[n] = -1;
}

void NetworkSimplex::link_child(int node, int parent) {
    const auto n = static_cast<std::size_t>(node);
    const auto p = static_cast<std::size_t>(parent);
    parent_[n] = parent;
    prev_sibling_[n] = -1;
    next_sibling_[n] = first_child_[p];
    if (first_child_[p] >= 0) prev_sibling_[static_cast<std::size_t>(first_child_[p])] = node;
    first_child_[p] = node;
}

void NetworkSimplex::refresh_artificial_costs() {
    double max_cost = 0.0;
    for (int a = 0; a < arc_count_; ++a) {
        max_cost = std::max(max_cost, std::abs(cost_[static_cast<std::size_t>(a)]));
    }
    const double art = (max_cost + 1.0) * static_cast<double>(node_count_ + 1);
    for (int u = 0; u < node_count_; ++u) {
        cost_[static_cast<std::size_t>(arc_count_ + u)] = art;
    }
    eps_ = 1e-11 * (max_cost + 1.0);
}

void NetworkSimplex::build_initial_basis() {
    const auto n = static_cast<std::size_t>(node_count_) + 1;
    const auto m = static_cast<std::size_t>(arc_count_);
    const auto total = m + static_cast<std::size_t>(node_count_);

    source_.resize(m);
    target_.resize(m);
    cap_.resize(m);
    cost_.resize(m);
    flow_.assign(total, 0.0);
    state_.assign(total, kLower);
    source_.resize(total);
    target_.resize(total);
    cap_.resize(total, kInfinite);
    cost_.resize(total, 0.0);

    parent_.assign(n, -1);
    pred_.assign(n, -1);
    depth_.assign(n, 0);
    dir_.assign(n, kUp);
    pi_.assign(n, 0.0);
    first_child_.assign(n, -1);
    next_sibling_.assign(n, -1);
    prev_sibling_.assign(n, -1);

    double balance = 0.0;
    for (double s : supply_) balance += s;
    double scale = 1.0;
    for (double s : supply_) scale = std::max(scale, std::abs(s));
    if (std::abs(balance) > 1e-9 * scale) {
        throw std::invalid_argument("network supplies do not balance");
    }

    for (int u = 0; u < node_count_; ++u) {
        const auto a = m + static_cast<std::size_t>(u);
        const auto uu = static_cast<std::size_t>(u);
        cap_[a] = kInfinite;
        state_[a] = kTree;
        pred_[uu] = static_cast<int>(a);
        depth_[uu] = 1;
        link_child(u, root_);
        if (supply_[uu] >= 0.0) {
            source_[a] = u;
            target_[a] = root_;
            flow_[a] = supply_[uu];
            dir_[uu] = kUp;
        } else {
            source_[a] = root_;
            target_[a] = u;
            flow_[a] = -supply_[uu];
            dir_[uu] = kDown;
        }
    }
    block_start_ = 0;
    basis_valid_ = true;
}

void NetworkSimplex::recompute_potentials(int subtree_root) {
    dfs_stack_.clear();
    if (subtree_root == root_) {
        pi_[static_cast<std::size_t>(root_)] = 0.0;
        depth_[static_cast<std::size_t>(root_)] = 0;
        for (int c = first_child_[static_cast<std::size_t>(root_)]; c >= 0;
             c = next_sibling_[static_cast<std::size_t>(c)]) {
            dfs_stack_.push_back(c);
        }
    } else {
        dfs_stack_.push_back(subtree_root);
    }
    while (!dfs_stack_.empty()) {
        const int u = dfs_stack_.back();
        dfs_stack_.pop_back();
        const auto uu = static_cast<std::size_t>(u);
        const auto p = static_cast<std::size_t>(parent_[uu]);
        const auto a = static_cast<std::size_t>(pred_[uu]);
        depth_[uu] = depth_[p] + 1;
        // Tree arcs have zero reduced cost: cost + pi[source] - pi[target] = 0.
        pi_[uu] = dir_[uu] == kUp ? pi_[p] - cost_[a] : pi_[p] + cost_[a];
        for (int c = first_child_[uu]; c >= 0; c = next_sibling_[static_cast<std::size_t>(c)]) {
            dfs_stack_.push_back(c);
        }
    }
}

bool NetworkSimplex::find_entering(int& arc) {
    const auto m = static_cast<std::size_t>(arc_count_);
    if (m == 0) return false;
    const std::size_t block = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
    double best = -eps_;
    int chosen = -1;
    std::size_t scanned = 0;
    std::size_t e = block_start_;
    for (std::size_t k = 0; k < m; ++k) {
        const double rc = static_cast<double>(state_[e]) *
                          (cost_[e] + pi_[static_cast<std::size_t>(source_[e])] -
                           pi_[static_cast<std::size_t>(target_[e])]);
        if (rc < best) {
            best = rc;
            chosen = static_cast<int>(e);
        }
        if (++e == m) e = 0;
        if (++scanned == block) {
            if (chosen >= 0) break;
            scanned = 0;
        }
    }
    block_start_ = e;
    arc = chosen;
    return chosen >= 0;
}

int NetworkSimplex::find_join(int u, int v) const {
    while (u != v) {
        const int du = depth_[static_cast<std::size_t>(u)];
        const int dv = depth_[static_cast<std::size_t>(v)];
        if (du >= dv) u = parent_[static_cast<std::size_t>(u)];
        if (dv >= du) v = parent_[static_cast<std::size_t>(v)];
    }
    return u;
}

bool NetworkSimplex::pivot(int entering) {
    const auto e = static_cast<std::size_t>(entering);
    const int first = state_[e] == kLower ? source_[e] : target_[e];
    const int second = state_[e] == kLower ? target_[e] : source_[e];
    const int join = find_join(first, second);

    double delta = cap_[e];
    int u_out = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto uu = static_cast<std::size_t>(u);
        const auto a = static_cast<std::size_t>(pred_[uu]);
        double d = dir_[uu] == kDown ? cap_[a] - flow_[a] : flow_[a];
        d = std::max(d, 0.0);
        if (d < delta) {
            delta = d;
            u_out = u;
            side = 1;
        }
    }
    for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto uu = static_cast<std::size_t>(u);
        const auto a = static_cast<std::size_t>(pred_[uu]);
        double d = dir_[uu] == kUp ? cap_[a] - flow_[a] : flow_[a];
        d = std::max(d, 0.0);
        if (d <= delta) {
            delta = d;
            u_out = u;
            side = 2;
        }
    }
    if (delta >= kInfinite) return false;

    if (delta > 0.0) {
        const double val = static_cast<double>(state_[e]) * delta;
        flow_[e] += val;
        for (int u = source_[e]; u != join; u = parent_[static_cast<std::size_t>(u)]) {
            const auto uu = static_cast<std::size_t>(u);
            flow_[static_cast<std::size_t>(pred_[uu])] -= static_cast<double>(dir_[uu]) * val;
        }
        for (int u = target_[e]; u != join; u = parent_[static_cast<std::size_t>(u)]) {
            const auto uu = static_cast<std::size_t>(u);
            flow_[static_cast<std::size_t>(pred_[uu])] += static_cast<double>(dir_[uu]) * val;
        }
    }

    if (side == 0) {
        // The entering arc blocks itself: it swaps bounds, the tree is unchanged.
        state_[e] = static_cast<std::int8_t>(-state_[e]);
        flow_[e] = state_[e] == kUpper ? cap_[e] : 0.0;
        return true;
    }

    const auto out_node = static_cast<std::size_t>(u_out);
    const auto out_arc = static_cast<std::size_t>(pred_[out_node]);
    const bool at_upper = side == 1 ? dir_[out_node] == kDown : dir_[out_node] == kUp;
    state_[out_arc] = at_upper ? kUpper : kLower;
    flow_[out_arc] = at_upper ? cap_[out_arc] : 0.0;
    state_[e] = kTree;

    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;

    // Reverse the tree path u_in -> u_out so that u_in hangs below v_in.
    path_.clear();
    for (int u = u_in; u != u_out; u = parent_[static_cast<std::size_t>(u)]) path_.push_back(u);
    path_.push_back(u_out);

    unlink_child(u_out);
    for (std::size_t k = path_.size() - 1; k > 0; --k) {
        const int child = path_[k - 1];
        const int node = path_[k];
        const auto c = static_cast<std::size_t>(child);
        const auto nd = static_cast<std::size_t>(node);
        unlink_child(child);
        pred_[nd] = pred_[c];
        dir_[nd] = static_cast<std::int8_t>(-dir_[c]);
        link_child(node, child);
    }
    const auto in_node = static_cast<std::size_t>(u_in);
    pred_[in_node] = entering;
    dir_[in_node] = source_[e] == u_in ? kUp : kDown;
    link_child(u_in, v_in);

    recompute_potentials(u_in);
    return true;
}

NetworkSimplex::Status NetworkSimplex::solve() {
    const bool structure_changed =
        flow_.size() != static_cast<std::size_t>(arc_count_ + node_count_);
    if (!basis_valid_ || structure_changed) build_initial_basis();
    refresh_artificial_costs();
    recompute_potentials(root_);

    last_pivots_ = 0;
    const std::size_t limit = 200 * static_cast<std::size_t>(arc_count_ + node_count_) + 1000;
    int entering = -1;
    while (find_entering(entering)) {
        if (!pivot(entering)) return Status::Unbounded;
        if (++last_pivots_ > limit) {
            basis_valid_ = false;
            return Status::IterationLimit;
        }
    }

    double scale = 1.0;
    for (double s : supply_) scale = std::max(scale, std::abs(s));
    for (int u = 0; u < node_count_; ++u) {
        if (flow_[static_cast<std::size_t>(arc_count_ + u)] > 1e-9 * scale) {
            return Status::Infeasible;
        }
    }
    return Status::Optimal;
}

}  // namespace batval
