#pragma once

#include <algorithm>
#include <climits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/graph.hpp"

namespace spanex {

// Dinic max flow with integer capacities; edge order fixes tie-breaking.
class MaxFlow {
public:
    explicit MaxFlow(int nodes) : head_(nodes, -1), level_(nodes), it_(nodes) {}

    int add_edge(int u, int v, int cap) {
        to_.push_back(v);
        cap_.push_back(cap);
        next_.push_back(head_[u]);
        head_[u] = static_cast<int>(to_.size()) - 1;
        to_.push_back(u);
        cap_.push_back(0);
        next_.push_back(head_[v]);
        head_[v] = static_cast<int>(to_.size()) - 1;
        orig_.push_back(cap);
        orig_.push_back(0);
        return static_cast<int>(to_.size()) - 2;
    }

    int64_t run(int s, int t) {
        int64_t total = 0;
        while (bfs(s, t)) {
            for (size_t i = 0; i < head_.size(); ++i) it_[i] = head_[i];
            while (int f = dfs(s, t, INT_MAX)) total += f;
        }
        return total;
    }

    int flow_on(int e) const { return orig_[e] - cap_[e]; }

    // Nodes reachable from s in the residual graph.
    std::vector<char> source_side(int s) const {
        std::vector<char> seen(head_.size(), 0);
        std::vector<int> q{s};
        seen[s] = 1;
        for (size_t i = 0; i < q.size(); ++i)
            for (int e = head_[q[i]]; e >= 0; e = next_[e])
                if (cap_[e] > 0 && !seen[to_[e]]) {
                    seen[to_[e]] = 1;
                    q.push_back(to_[e]);
                }
        return seen;
    }

    // Follow out-edges of u that carry flow.
    template <class F>
    void for_each_flow_edge(int u, F&& f) const {
        for (int e = head_[u]; e >= 0; e = next_[e])
            if (!(e & 1) && flow_on(e) > 0) f(to_[e], flow_on(e));
    }

private:
    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::vector<int> q{s};
        level_[s] = 0;
        for (size_t i = 0; i < q.size(); ++i)
            for (int e = head_[q[i]]; e >= 0; e = next_[e])
                if (cap_[e] > 0 && level_[to_[e]] < 0) {
                    level_[to_[e]] = level_[q[i]] + 1;
                    q.push_back(to_[e]);
                }
        return level_[t] >= 0;
    }

    int dfs(int u, int t, int f) {
        if (u == t) return f;
        for (int& e = it_[u]; e >= 0; e = next_[e]) {
            int v = to_[e];
            if (cap_[e] > 0 && level_[v] == level_[u] + 1) {
                int got = dfs(v, t, std::min(f, cap_[e]));
                if (got > 0) {
                    cap_[e] -= got;
                    cap_[e ^ 1] += got;
                    return got;
                }
            }
        }
        return 0;
    }

    std::vector<int> head_, level_, it_;
    std::vector<int> to_, cap_, next_, orig_;
};

// f indexed by host vertex id; only entries of a are read.
struct StarDemand {
    VertexSet a, b;
    std::vector<int> f;
};

struct StarMatching {
    std::vector<std::pair<int, std::vector<int>>> stars;  // sorted by center

    const std::vector<int>* leaves_of(int center) const {
        auto it = std::lower_bound(stars.begin(), stars.end(), center,
                                   [](const auto& s, int c) { return s.first < c; });
        if (it == stars.end() || it->first != center) return nullptr;
        return &it->second;
    }
    size_t leaf_count() const {
        size_t c = 0;
        for (const auto& s : stars) c += s.second.size();
        return c;
    }
};

struct HallViolator {
    std::vector<int> x;
    int neighborhood = 0;  // |N(X) ∩ B|
    int demand = 0;        // Σ_{v∈X} f(v)
};

using FMatchResult = Result<StarMatching, HallViolator>;

namespace detail {

inline int hall_neighborhood(const Graph& g, const std::vector<int>& x, const Bitset& b) {
    Bitset xs(g.n());
    for (int v : x) xs.set(v);
    return external_neighborhood(g, xs).and_count(b);
}

inline void check_sides(const VertexSet& a, const VertexSet& b) {
    if (a.bits().intersects(b.bits())) throw InvalidParameter("A and B must be disjoint");
}

}  // namespace detail

// Max flow on source -> a (cap f) -> b (edges) -> sink (cap 1). Leaves of
// the returned stars are the flow-carrying edges; may be partial.
inline StarMatching star_matching_flow(const Graph& g, const VertexSet& a, const VertexSet& b,
                                       const std::vector<int>& f, int64_t* flow_value = nullptr,
                                       std::vector<char>* source_side = nullptr) {
    int na = a.size(), nb = b.size();
    int src = na + nb, snk = na + nb + 1;
    MaxFlow mf(na + nb + 2);
    std::vector<int> bpos(g.n(), -1);
    for (int j = 0; j < nb; ++j) bpos[b.members()[j]] = j;
    for (int i = 0; i < na; ++i) mf.add_edge(src, i, f[a.members()[i]]);
    for (int i = 0; i < na; ++i)
        for (int u : g.adj(a.members()[i]))
            if (bpos[u] >= 0) mf.add_edge(i, na + bpos[u], INT_MAX / 4);
    for (int j = 0; j < nb; ++j) mf.add_edge(na + j, snk, 1);
    int64_t val = mf.run(src, snk);
    if (flow_value) *flow_value = val;
    if (source_side) *source_side = mf.source_side(src);
    StarMatching m;
    for (int i = 0; i < na; ++i) {
        std::vector<int> leaves;
        mf.for_each_flow_edge(i, [&](int node, int) { leaves.push_back(b.members()[node - na]); });
        std::sort(leaves.begin(), leaves.end());
        m.stars.emplace_back(a.members()[i], std::move(leaves));
    }
    return m;
}

inline FMatchResult f_matching(const Graph& g, const StarDemand& dem) {
    detail::check_sides(dem.a, dem.b);
    int64_t total = 0;
    for (int v : dem.a) {
        if (dem.f[v] < 0) throw InvalidParameter("negative demand");
        total += dem.f[v];
    }
    if (total != dem.b.size())
        throw DemandMismatch("sum of demands " + std::to_string(total) + " != |B| = " +
                             std::to_string(dem.b.size()));
    int64_t val = 0;
    std::vector<char> side;
    StarMatching m = star_matching_flow(g, dem.a, dem.b, dem.f, &val, &side);
    if (val == total) return m;
    HallViolator hv;
    for (int i = 0; i < dem.a.size(); ++i)
        if (side[i]) hv.x.push_back(dem.a.members()[i]);
    // shrink to an inclusion-minimal violator
    auto deficit_ok = [&](const std::vector<int>& x) {
        int dem_sum = 0;
        for (int v : x) dem_sum += dem.f[v];
        return detail::hall_neighborhood(g, x, dem.b.bits()) < dem_sum;
    };
    for (size_t i = 0; i < hv.x.size();) {
        std::vector<int> trial = hv.x;
        trial.erase(trial.begin() + i);
        if (!trial.empty() && deficit_ok(trial))
            hv.x = std::move(trial);
        else
            ++i;
    }
    for (int v : hv.x) hv.demand += dem.f[v];
    hv.neighborhood = detail::hall_neighborhood(g, hv.x, dem.b.bits());
    return hv;
}

inline bool verify_star_matching(const Graph& g, const StarDemand& dem, const StarMatching& m,
                                 bool require_complete = true) {
    Bitset used(g.n());
    size_t centers = 0;
    for (const auto& [c, leaves] : m.stars) {
        if (!dem.a.contains(c)) return false;
        ++centers;
        if (require_complete && static_cast<int>(leaves.size()) != dem.f[c]) return false;
        if (static_cast<int>(leaves.size()) > dem.f[c]) return false;
        for (int l : leaves) {
            if (!dem.b.contains(l) || used.test(l) || !g.has_edge(c, l)) return false;
            used.set(l);
        }
    }
    if (require_complete) {
        size_t needed = 0;
        for (int v : dem.a)
            if (dem.f[v] > 0) ++needed;
        size_t nonempty = 0;
        for (const auto& s : m.stars)
            if (!s.second.empty()) ++nonempty;
        if (nonempty < needed) return false;
    }
    return centers <= static_cast<size_t>(dem.a.size());
}

struct GreedyStarResult {
    StarMatching matching;
    std::vector<int> uncovered_a, uncovered_b;
    bool joined_bound_ok = true;  // min(|A'|,|B'|) < m when f ≡ 1 and m given
};

// Inclusion-maximal star packing in one seeded pass over a. Leaves are chosen
// by ascending degree into a, ties by id.
inline GreedyStarResult maximal_star_matching_greedy(const Graph& g, const VertexSet& a,
                                                     const VertexSet& b,
                                                     const std::vector<int>& f, uint64_t seed,
                                                     int joined_m = 0) {
    detail::check_sides(a, b);
    Rng rng(seed);
    std::vector<int> order = a.members();
    shuffle_in_place(order, rng);
    Bitset free_b = b.bits();
    std::vector<int> weight(g.n(), 0);
    for (int v : b) weight[v] = g.degree_into(v, a.bits());
    GreedyStarResult out;
    std::vector<std::pair<int, std::vector<int>>> stars;
    bool unit = true;
    for (int u : a) unit = unit && f[u] == 1;
    for (int u : order) {
        int need = f[u];
        std::vector<int> cand;
        for (int v : g.adj(u))
            if (free_b.test(v)) cand.push_back(v);
        if (static_cast<int>(cand.size()) < need || need <= 0) {
            if (need > 0) out.uncovered_a.push_back(u);
            continue;
        }
        std::stable_sort(cand.begin(), cand.end(),
                         [&](int x, int y) { return weight[x] < weight[y]; });
        cand.resize(need);
        std::sort(cand.begin(), cand.end());
        for (int v : cand) free_b.reset(v);
        stars.emplace_back(u, std::move(cand));
    }
    std::sort(stars.begin(), stars.end());
    out.matching.stars = std::move(stars);
    std::sort(out.uncovered_a.begin(), out.uncovered_a.end());
    out.uncovered_b = free_b.to_vector();
    if (joined_m > 0 && unit)
        out.joined_bound_ok = std::min(out.uncovered_a.size(), out.uncovered_b.size()) <
                              static_cast<size_t>(joined_m);
    return out;
}

// Conditions (1)-(3) of the one-sided star lemma, exhaustively.
inline bool verify_lemma_star_hypotheses(const Graph& g, const VertexSet& a, const VertexSet& b,
                                         int d, int m,
                                         uint64_t budget = kDefaultExhaustiveBudget) {
    detail::check_sides(a, b);
    int na = a.size(), nb = b.size();
    uint64_t cost = 0;
    for (int j = 1; j <= std::min(m, na); ++j) cost = saturating_add(cost, binomial(na, j));
    if (m <= na && m <= nb) cost = saturating_add(cost, binomial(na, m));
    if (cost > budget) throw SizeLimitExceeded("star hypotheses need " + std::to_string(cost));
    // (3)
    for (int w : b)
        if (g.degree_into(w, a.bits()) < m) return false;
    // (1)
    for (int j = 1; j <= std::min(m, na); ++j) {
        std::vector<int> idx(j);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            std::vector<int> x;
            for (int i : idx) x.push_back(a.members()[i]);
            if (detail::hall_neighborhood(g, x, b.bits()) < d * j) return false;
        } while (next_combination(idx, na));
    }
    // (2): some m-subset of B avoids N(X) for an m-subset X of A
    if (m >= 1 && m <= na && m <= nb) {
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            std::vector<int> x;
            for (int i : idx) x.push_back(a.members()[i]);
            int hit = detail::hall_neighborhood(g, x, b.bits());
            if (nb - hit >= m) return false;
        } while (next_combination(idx, na));
    }
    return true;
}

// Conditions (1)-(2) of the two-sided variant.
inline bool verify_lemma_star1_hypotheses(const Graph& g, const VertexSet& a,
                                          const VertexSet& b, int d, int m,
                                          uint64_t budget = kDefaultExhaustiveBudget) {
    detail::check_sides(a, b);
    auto one_side = [&](const VertexSet& s, const VertexSet& t) {
        int ns = s.size();
        uint64_t cost = 0;
        for (int j = 1; j <= std::min(m, ns); ++j) cost = saturating_add(cost, binomial(ns, j));
        if (cost > budget) throw SizeLimitExceeded("star1 hypotheses need " + std::to_string(cost));
        for (int j = 1; j <= std::min(m, ns); ++j) {
            std::vector<int> idx(j);
            std::iota(idx.begin(), idx.end(), 0);
            do {
                std::vector<int> x;
                for (int i : idx) x.push_back(s.members()[i]);
                if (detail::hall_neighborhood(g, x, t.bits()) < d * j) return false;
            } while (next_combination(idx, ns));
        }
        return true;
    };
    if (!one_side(a, b) || !one_side(b, a)) return false;
    int na = a.size(), nb = b.size();
    if (m >= 1 && m <= na && m <= nb) {
        std::vector<int> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            std::vector<int> x;
            for (int i : idx) x.push_back(a.members()[i]);
            if (nb - detail::hall_neighborhood(g, x, b.bits()) >= m) return false;
        } while (next_combination(idx, na));
    }
    return true;
}

}  // namespace spanex
