#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "mlt/geometry.hpp"
#include "mlt/types.hpp"

namespace mlt {

/// Temporal endpoints and appearance of one linkable feature. Detections are
/// single-frame (first == last); point tracklets span several frames and carry
/// color at both ends.
struct LinkFeature {
    int first_frame{0};
    int last_frame{0};
    Vec2 first_pos;
    Vec2 last_pos;
    Color3 first_color;      // point tracklets only
    Color3 last_color;
    double confidence{0.0};  // detections only
};

/// Squashes a raw confidence into [eps, 1-eps] using the sequence-wide range
/// and prices the feature: negative exactly when the squashed belief exceeds
/// one half. A degenerate range maps everything to the indifferent price 0.
inline double detection_cost(double conf, double conf_min, double conf_max, double eps) {
    double q = 0.5;
    if (conf_max > conf_min)
        q = eps + (1.0 - 2.0 * eps) * (conf - conf_min) / (conf_max - conf_min);
    return std::log((1.0 - q) / q);
}

/// Price of handing a track over from feature a to feature b. Normalized
/// displacement per frame, appearance change (point tracklets only), and the
/// length of the temporal gap each contribute one term.
inline double link_cost(const LinkFeature& a, const LinkFeature& b, Category cat,
                        const TrackerConfig& cfg) {
    const int dt = b.first_frame - a.last_frame;
    if (dt < 1) throw std::invalid_argument("link_cost: features must be in temporal order");
    double cost = (b.first_pos - a.last_pos).norm() / (cfg.v_max * dt) +
                  static_cast<double>(dt) / cfg.f_max;
    if (cat == Category::low) cost += color_distance(a.last_color, b.first_color) / cfg.a_max;
    return cost;
}

struct LinkArc {
    int from{0};
    int to{0};
    double cost{0.0};
};

/// Candidate hand-off structure for one feature category.
struct LinkGraph {
    Category category{Category::mid};
    int n{0};
    std::vector<double> det_cost;      // per-feature price
    std::vector<LinkArc> transitions;  // gated hand-off arcs
    double c_in{0.0};
    double c_out{0.0};
};

/// Builds the hand-off graph. A pair (i, j) is a candidate when j starts
/// 1..f_max frames after i ends and the per-frame displacement term stays
/// within twice the speed budget.
inline LinkGraph build_graph(const std::vector<LinkFeature>& features,
                             const std::vector<double>& det_costs, Category cat,
                             const TrackerConfig& cfg) {
    if (det_costs.size() != features.size())
        throw std::invalid_argument("build_graph: det_costs size mismatch");
    LinkGraph g;
    g.category = cat;
    g.n = static_cast<int>(features.size());
    g.det_cost = det_costs;
    g.c_in = cfg.c_in;
    g.c_out = cfg.c_out;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (i == j) continue;
            const int dt = features[j].first_frame - features[i].last_frame;
            if (dt < 1 || dt > cfg.f_max) continue;
            const double dp = (features[j].first_pos - features[i].last_pos).norm();
            if (dp / (cfg.v_max * dt) > 2.0) continue;
            g.transitions.push_back({i, j, link_cost(features[i], features[j], cat, cfg)});
        }
    return g;
}

/// Chains of feature indices selected by the linking step, plus the priced
/// objective: one entry and one exit fee per chain, the per-feature price of
/// every member, and the hand-off price of every consecutive pair.
struct FlowResult {
    std::vector<std::vector<int>> chains;
    double total_cost{0.0};
};

namespace detail {

class MinCostFlow {
  public:
    explicit MinCostFlow(int n) : adj_(n), pot_(n, 0.0) {}

    int add_arc(int from, int to, int cap, double cost) {
        const int id = static_cast<int>(to_.size());
        to_.push_back(to);
        cap_.push_back(cap);
        cost_.push_back(cost);
        adj_[from].push_back(id);
        to_.push_back(from);
        cap_.push_back(0);
        cost_.push_back(-cost);
        adj_[to].push_back(id + 1);
        return id;
    }

    int flow_on(int arc_id) const { return cap_[arc_id ^ 1]; }

    /// Generic potential init; handles negative arc costs at zero flow.
    void init_potentials(int s) {
        const int n = static_cast<int>(adj_.size());
        std::vector<double> d(n, kInf);
        d[s] = 0.0;
        for (int round = 0; round < n; ++round) {
            bool changed = false;
            for (int v = 0; v < n; ++v) {
                if (d[v] == kInf) continue;
                for (int id : adj_[v]) {
                    if (cap_[id] <= 0) continue;
                    if (d[v] + cost_[id] < d[to_[id]] - 1e-15) {
                        d[to_[id]] = d[v] + cost_[id];
                        changed = true;
                    }
                }
            }
            if (!changed) break;
            if (round == n - 1) throw std::logic_error("negative cycle in linking graph");
        }
        for (int v = 0; v < n; ++v) pot_[v] = d[v] == kInf ? 0.0 : d[v];
    }

    /// Dijkstra on reduced costs. Returns false when t is unreachable.
    bool shortest_path(int s, int t) {
        const int n = static_cast<int>(adj_.size());
        dist_.assign(n, kInf);
        parent_arc_.assign(n, -1);
        dist_[s] = 0.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        pq.push({0.0, s});
        while (!pq.empty()) {
            auto [d, v] = pq.top();
            pq.pop();
            if (d > dist_[v]) continue;
            for (int id : adj_[v]) {
                if (cap_[id] <= 0) continue;
                const double rc = std::max(0.0, cost_[id] + pot_[v] - pot_[to_[id]]);
                if (d + rc < dist_[to_[id]]) {
                    dist_[to_[id]] = d + rc;
                    parent_arc_[to_[id]] = id;
                    pq.push({dist_[to_[id]], to_[id]});
                }
            }
        }
        return dist_[t] < kInf;
    }

    double path_cost(int s, int t) const { return dist_[t] + pot_[t] - pot_[s]; }

    /// Pushes the bottleneck along the current shortest path and folds the
    /// distances into the potentials. Returns the amount pushed.
    int push(int s, int t) {
        int bottleneck = std::numeric_limits<int>::max();
        for (int v = t; v != s; v = to_[parent_arc_[v] ^ 1])
            bottleneck = std::min(bottleneck, cap_[parent_arc_[v]]);
        for (int v = t; v != s; v = to_[parent_arc_[v] ^ 1]) {
            cap_[parent_arc_[v]] -= bottleneck;
            cap_[parent_arc_[v] ^ 1] += bottleneck;
        }
        for (std::size_t v = 0; v < adj_.size(); ++v)
            pot_[v] += dist_[v] == kInf ? dist_[t] : dist_[v];
        return bottleneck;
    }

  private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> adj_;
    std::vector<int> to_;
    std::vector<int> cap_;
    std::vector<double> cost_;
    std::vector<double> pot_;
    std::vector<double> dist_;
    std::vector<int> parent_arc_;
};

/// Rebuilds chains from arc flows and reprices them in a fixed order.
inline FlowResult decode_chains(const LinkGraph& g, const std::vector<int>& entry,
                                const std::vector<int>& member,
                                const std::vector<std::pair<const LinkArc*, int>>& used_arcs) {
    std::vector<int> succ(g.n, -1);
    for (const auto& [arc, flow] : used_arcs) {
        if (flow <= 0) continue;
        if (succ[arc->from] != -1) throw std::logic_error("feature with two successors");
        succ[arc->from] = arc->to;
    }
    FlowResult res;
    std::vector<char> seen(g.n, 0);
    for (int i = 0; i < g.n; ++i) {
        if (!entry[i]) continue;
        std::vector<int> chain;
        double cost = g.c_in + g.c_out;
        for (int v = i; v != -1; v = succ[v]) {
            if (seen[v]) throw std::logic_error("feature in two chains");
            seen[v] = 1;
            chain.push_back(v);
            cost += g.det_cost[v];
        }
        res.chains.push_back(std::move(chain));
        res.total_cost += cost;
    }
    std::map<std::pair<int, int>, double> arc_cost;
    for (const auto& a : g.transitions) {
        auto it = arc_cost.find({a.from, a.to});
        if (it == arc_cost.end() || a.cost < it->second) arc_cost[{a.from, a.to}] = a.cost;
    }
    for (const auto& chain : res.chains)
        for (std::size_t k = 0; k + 1 < chain.size(); ++k)
            res.total_cost += arc_cost.at({chain[k], chain[k + 1]});
    for (int i = 0; i < g.n; ++i)
        if (member[i] && !seen[i]) throw std::logic_error("selected feature not on any chain");
    return res;
}

/// Optional-coverage solve: keeps augmenting unit paths while the cheapest
/// chain extension still lowers the objective.
inline FlowResult solve_optional(const LinkGraph& g) {
    const int s = 0, t = 1;
    auto u = [](int i) { return 2 + 2 * i; };
    auto v = [](int i) { return 3 + 2 * i; };
    MinCostFlow mcf(2 + 2 * g.n);
    std::vector<int> in_arc(g.n), det_arc(g.n), out_arc(g.n);
    for (int i = 0; i < g.n; ++i) {
        in_arc[i] = mcf.add_arc(s, u(i), 1, g.c_in);
        det_arc[i] = mcf.add_arc(u(i), v(i), 1, g.det_cost[i]);
        out_arc[i] = mcf.add_arc(v(i), t, 1, g.c_out);
    }
    std::vector<int> trans_arc;
    trans_arc.reserve(g.transitions.size());
    for (const auto& a : g.transitions) {
        if (a.from < 0 || a.from >= g.n || a.to < 0 || a.to >= g.n)
            throw std::invalid_argument("transition arc out of range");
        trans_arc.push_back(mcf.add_arc(v(a.from), u(a.to), 1, a.cost));
    }
    if (g.n > 0) {
        mcf.init_potentials(s);
        while (mcf.shortest_path(s, t)) {
            if (mcf.path_cost(s, t) >= -1e-12) break;
            mcf.push(s, t);
        }
    }
    std::vector<int> entry(g.n), member(g.n);
    std::vector<std::pair<const LinkArc*, int>> used;
    for (int i = 0; i < g.n; ++i) {
        entry[i] = mcf.flow_on(in_arc[i]);
        member[i] = mcf.flow_on(det_arc[i]);
    }
    for (std::size_t k = 0; k < g.transitions.size(); ++k)
        used.emplace_back(&g.transitions[k], mcf.flow_on(trans_arc[k]));
    return decode_chains(g, entry, member, used);
}

/// Mandatory-coverage solve: every feature must lie on exactly one chain.
/// The unit lower bound on each feature arc is folded into a supply at its
/// head and a demand at its tail; a return arc t -> s lets chains recirculate.
inline FlowResult solve_mandatory(const LinkGraph& g) {
    if (g.n == 0) return {};
    const int s = 0, t = 1;
    auto u = [](int i) { return 2 + 2 * i; };
    auto v = [](int i) { return 3 + 2 * i; };
    const int ss = 2 + 2 * g.n, tt = 3 + 2 * g.n;
    MinCostFlow mcf(4 + 2 * g.n);
    std::vector<int> in_arc(g.n);
    double fixed = 0.0;
    for (int i = 0; i < g.n; ++i) {
        in_arc[i] = mcf.add_arc(s, u(i), 1, g.c_in);
        mcf.add_arc(v(i), t, 1, g.c_out);
        fixed += g.det_cost[i];
        mcf.add_arc(ss, v(i), 1, 0.0);
        mcf.add_arc(u(i), tt, 1, 0.0);
    }
    std::vector<int> trans_arc;
    trans_arc.reserve(g.transitions.size());
    for (const auto& a : g.transitions) {
        if (a.from < 0 || a.from >= g.n || a.to < 0 || a.to >= g.n)
            throw std::invalid_argument("transition arc out of range");
        trans_arc.push_back(mcf.add_arc(v(a.from), u(a.to), 1, a.cost));
    }
    mcf.add_arc(t, s, g.n, 0.0);
    mcf.init_potentials(ss);
    int pushed = 0;
    while (pushed < g.n && mcf.shortest_path(ss, tt)) pushed += mcf.push(ss, tt);
    if (pushed != g.n) throw std::logic_error("mandatory coverage is infeasible");
    std::vector<int> entry(g.n), member(g.n, 1);
    std::vector<std::pair<const LinkArc*, int>> used;
    for (int i = 0; i < g.n; ++i) entry[i] = mcf.flow_on(in_arc[i]);
    for (std::size_t k = 0; k < g.transitions.size(); ++k)
        used.emplace_back(&g.transitions[k], mcf.flow_on(trans_arc[k]));
    FlowResult res = decode_chains(g, entry, member, used);
    (void)fixed;  // det costs already repriced by decode_chains
    return res;
}

}  // namespace detail

/// Links features into chains. Point tracklets (low) must all be covered;
/// detections (mid) are included only when they pay for themselves.
inline FlowResult solve_linking(const LinkGraph& g) {
    return g.category == Category::low ? detail::solve_mandatory(g) : detail::solve_optional(g);
}

/// Exhaustive reference solver: enumerates every feasible chain system over a
/// topological order of the hand-off DAG and returns the cheapest. Refuses
/// instances with more than 10 features.
inline FlowResult oracle_solve(const LinkGraph& g) {
    if (g.n > 10) throw std::invalid_argument("oracle_solve: instance too large (max 10 features)");
    const bool mandatory = g.category == Category::low;

    std::map<std::pair<int, int>, double> arc_cost;
    std::vector<int> indeg(g.n, 0);
    for (const auto& a : g.transitions) {
        if (a.from < 0 || a.from >= g.n || a.to < 0 || a.to >= g.n)
            throw std::invalid_argument("transition arc out of range");
        auto it = arc_cost.find({a.from, a.to});
        if (it == arc_cost.end())
            arc_cost[{a.from, a.to}] = a.cost;
        else
            it->second = std::min(it->second, a.cost);
    }
    for (const auto& [key, cost] : arc_cost) ++indeg[key.second];

    // Kahn's algorithm; smallest index first keeps the order reproducible.
    std::vector<int> order;
    {
        std::vector<int> deg = indeg;
        std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
        for (int i = 0; i < g.n; ++i)
            if (deg[i] == 0) ready.push(i);
        while (!ready.empty()) {
            const int x = ready.top();
            ready.pop();
            order.push_back(x);
            for (const auto& [key, cost] : arc_cost)
                if (key.first == x && --deg[key.second] == 0) ready.push(key.second);
        }
        if (static_cast<int>(order.size()) != g.n)
            throw std::invalid_argument("oracle_solve: hand-off graph has a cycle");
    }

    FlowResult best;
    best.total_cost = mandatory ? std::numeric_limits<double>::infinity() : 0.0;
    std::vector<int> succ(g.n, -1);
    std::vector<char> is_start(g.n, 0);
    std::vector<int> tails;

    auto snapshot = [&](double cost) {
        best.total_cost = cost;
        best.chains.clear();
        for (int i = 0; i < g.n; ++i) {
            if (!is_start[i]) continue;
            std::vector<int> chain;
            for (int x = i; x != -1; x = succ[x]) chain.push_back(x);
            best.chains.push_back(std::move(chain));
        }
    };
    if (!mandatory) snapshot(0.0);

    auto recurse = [&](auto&& self, std::size_t pos, double cost) -> void {
        if (pos == order.size()) {
            if (cost < best.total_cost - 1e-15) snapshot(cost);
            return;
        }
        const int x = order[pos];
        if (!mandatory) self(self, pos + 1, cost);  // leave x out
        is_start[x] = 1;  // open a new chain at x
        tails.push_back(x);
        self(self, pos + 1, cost + g.c_in + g.c_out + g.det_cost[x]);
        tails.pop_back();
        is_start[x] = 0;
        for (std::size_t k = 0; k < tails.size(); ++k) {  // extend an open chain
            const int i = tails[k];
            auto it = arc_cost.find({i, x});
            if (it == arc_cost.end()) continue;
            succ[i] = x;
            const int saved = tails[k];
            tails[k] = x;
            self(self, pos + 1, cost + it->second + g.det_cost[x]);
            tails[k] = saved;
            succ[i] = -1;
        }
    };
    recurse(recurse, 0, 0.0);

    if (mandatory && !std::isfinite(best.total_cost))
        throw std::logic_error("oracle_solve: no feasible covering");
    std::sort(best.chains.begin(), best.chains.end());
    return best;
}

}  // namespace mlt
