#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/embedding.hpp"
#include "spanex/graph.hpp"
#include "spanex/search.hpp"
#include "spanex/spectral.hpp"
#include "spanex/tree.hpp"

namespace spanex {

// Subgraph S of the host window G' = G[allowed] with bookkeeping for the
// (d,m)-extendability inequality.
class ExtendableState {
public:
    ExtendableState(const Graph& host, int d, int m)
        : ExtendableState(host, d, m, VertexSet::all(host.n()).bits()) {}
    ExtendableState(const Graph& host, int d, int m, Bitset allowed)
        : host_(&host), d_(d), m_(m), allowed_(std::move(allowed)), in_s_(host.n()),
          deg_(host.n(), 0) {
        if (d < 3) throw InvalidParameter("extendability needs d >= 3");
        if (m < 1) throw InvalidParameter("extendability needs m >= 1");
    }

    const Graph& host() const { return *host_; }
    int d() const { return d_; }
    int m() const { return m_; }
    const Bitset& allowed() const { return allowed_; }
    const Bitset& vertices() const { return in_s_; }
    int size() const { return size_; }
    int degree(int v) const { return deg_[v]; }
    bool contains(int v) const { return in_s_.test(v); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    void add_vertex(int v) {
        if (!allowed_.test(v)) throw InvalidParameter("vertex outside the host window");
        if (!in_s_.test(v)) {
            in_s_.set(v);
            ++size_;
        }
    }
    void add_edge(int u, int v) {
        if (!host_->has_edge(u, v)) throw InvalidParameter("S edge missing from host");
        add_vertex(u);
        add_vertex(v);
        ++deg_[u];
        ++deg_[v];
        edges_.emplace_back(u, v);
    }

private:
    const Graph* host_;
    int d_, m_;
    Bitset allowed_;
    Bitset in_s_;
    std::vector<int> deg_;
    std::vector<std::pair<int, int>> edges_;
    int size_ = 0;
};

// Auto: exact when 2m <= 6 and the subset count fits the budget, else sampled.
enum class VerifyMode { None, Exact, Sampled, Auto };

struct ExtendCheck {
    bool ok = true;
    std::vector<int> witness;
    std::string violation;
};

namespace detail {

inline bool extendable_inequality(const ExtendableState& s, const std::vector<int>& x,
                                  int* lhs_out = nullptr, int* rhs_out = nullptr) {
    const Graph& g = s.host();
    Bitset gamma(g.n());
    int rhs = (s.d() - 1) * static_cast<int>(x.size());
    for (int v : x) {
        if (g.has_rows())
            gamma |= g.row(v);
        else
            for (int u : g.adj(v)) gamma.set(u);
        if (s.contains(v)) rhs -= s.degree(v) - 1;
    }
    gamma &= s.allowed();
    gamma.andnot(s.vertices());
    int lhs = gamma.count();
    if (lhs_out) *lhs_out = lhs;
    if (rhs_out) *rhs_out = rhs;
    return lhs >= rhs;
}

}  // namespace detail

inline ExtendCheck is_extendable(const ExtendableState& s, VerifyMode mode, int trials = 2000,
                                 uint64_t seed = 1, uint64_t budget = kDefaultExhaustiveBudget) {
    ExtendCheck out;
    if (mode == VerifyMode::None) return out;
    const Graph& g = s.host();
    for (int v = 0; v < g.n(); ++v)
        if (s.degree(v) > s.d()) {
            out.ok = false;
            out.witness = {v};
            out.violation = "S has a vertex of degree above d";
            return out;
        }
    std::vector<int> universe = s.allowed().to_vector();
    int nu = static_cast<int>(universe.size());
    auto report = [&](const std::vector<int>& x) {
        int lhs, rhs;
        detail::extendable_inequality(s, x, &lhs, &rhs);
        out.ok = false;
        out.witness = x;
        std::ostringstream os;
        os << "|Gamma(X)\\V(S)|=" << lhs << " < " << rhs;
        out.violation = os.str();
    };
    int top = std::min(2 * s.m(), nu);
    uint64_t cost = 0;
    for (int j = 1; j <= top; ++j) cost = saturating_add(cost, binomial(nu, j));
    if (mode == VerifyMode::Auto)
        mode = (2 * s.m() <= 6 && cost <= budget) ? VerifyMode::Exact : VerifyMode::Sampled;
    if (mode == VerifyMode::Exact) {
        if (cost > budget)
            throw SizeLimitExceeded("extendability check needs " + std::to_string(cost) +
                                    " subset evaluations, budget " + std::to_string(budget));
        for (int j = 1; j <= top; ++j) {
            std::vector<int> idx(j);
            std::iota(idx.begin(), idx.end(), 0);
            do {
                std::vector<int> x;
                for (int i : idx) x.push_back(universe[i]);
                if (!detail::extendable_inequality(s, x)) {
                    report(x);
                    return out;
                }
            } while (next_combination(idx, nu));
        }
        return out;
    }
    for (int v : universe)
        if (!detail::extendable_inequality(s, {v})) {
            report({v});
            return out;
        }
    // random sets seeded from S, where the inequality is tightest
    std::vector<int> in_s = s.vertices().to_vector();
    Rng rng(seed);
    for (int trial = 0; trial < trials && top >= 2; ++trial) {
        int size = 2 + static_cast<int>(uniform_below(rng, top - 1));
        std::vector<int> x;
        Bitset seen(g.n());
        while (static_cast<int>(x.size()) < size) {
            int v;
            if (!in_s.empty() && uniform_below(rng, 3) != 0)
                v = in_s[uniform_below(rng, in_s.size())];
            else
                v = universe[uniform_below(rng, nu)];
            if (!seen.test(v)) {
                seen.set(v);
                x.push_back(v);
            }
            if (static_cast<int>(seen.count()) >= nu) break;
        }
        std::sort(x.begin(), x.end());
        if (!detail::extendable_inequality(s, x)) {
            report(x);
            return out;
        }
    }
    return out;
}

struct ExtendOptions {
    VerifyMode verify = VerifyMode::Auto;
    int sample_trials = 2000;
    uint64_t seed = 1;
    uint64_t budget = 1000000;  // node expansions per search
    int restarts = 6;
    bool check_bounds = true;
    uint64_t exhaustive_budget = kDefaultExhaustiveBudget;
};

inline int extend_path_k(int d, int m) {
    return static_cast<int>(std::ceil(std::log(2.0 * m) / std::log(d - 1.0) - 1e-12));
}

inline std::vector<int> extend_path(ExtendableState& s, int a, int b, int len,
                                    const ExtendOptions& opt = {}) {
    if (a == b || !s.contains(a) || !s.contains(b))
        throw PreconditionViolated("a and b must be distinct vertices of S");
    if (s.degree(a) > s.d() / 2.0 || s.degree(b) > s.d() / 2.0)
        throw PreconditionViolated("endpoint degree in S exceeds d/2");
    int k = extend_path_k(s.d(), s.m());
    if (len < 2 * k + 1)
        throw PreconditionViolated("len=" + std::to_string(len) + " < 2k+1=" +
                                   std::to_string(2 * k + 1) + " with k=" + std::to_string(k));
    int gsize = s.allowed().count();
    if (opt.check_bounds && s.size() > gsize - 10 * s.d() * s.m() - (len - 2 * k - 1))
        throw PreconditionViolated("|S|=" + std::to_string(s.size()) + " > |G|-10dm-(len-2k-1)=" +
                                   std::to_string(gsize - 10 * s.d() * s.m() - (len - 2 * k - 1)));
    Bitset pool = s.allowed();
    pool.andnot(s.vertices());
    for (int r = 0; r <= opt.restarts; ++r) {
        Rng rng(derive_seed(opt.seed, r));
        auto ps = find_exact_path(s.host(), a, b, len, pool, opt.budget, r ? &rng : nullptr);
        if (ps.path.empty()) {
            if (!ps.exhausted) break;  // no path exists at all
            continue;
        }
        ExtendableState trial = s;
        for (size_t i = 0; i + 1 < ps.path.size(); ++i) trial.add_edge(ps.path[i], ps.path[i + 1]);
        if (is_extendable(trial, opt.verify, opt.sample_trials, derive_seed(opt.seed, 100 + r),
                          opt.exhaustive_budget)
                .ok) {
            s = std::move(trial);
            return ps.path;
        }
    }
    throw SearchExhausted("extend_path: no extendable path of length " + std::to_string(len));
}

inline std::vector<int> extend_tree(ExtendableState& s, int root_in_s, const Tree& t, int t_root,
                                    const ExtendOptions& opt = {}) {
    if (!s.contains(root_in_s)) throw PreconditionViolated("root must lie in S");
    if (t.max_degree() > s.d() - 1)
        throw PreconditionViolated("tree max degree exceeds d-1");
    int gsize = s.allowed().count();
    if (opt.check_bounds && s.size() + t.n() > gsize - 2 * s.d() * s.m() - 3 * s.m())
        throw PreconditionViolated("|S|+|T|=" + std::to_string(s.size() + t.n()) +
                                   " > |G|-2dm-3m=" +
                                   std::to_string(gsize - 2 * s.d() * s.m() - 3 * s.m()));
    if (t.n() == 1) return {root_in_s};
    for (int r = 0; r <= opt.restarts; ++r) {
        PlacementOptions po;
        po.budget = opt.budget;
        po.restarts = 0;
        po.seed = derive_seed(opt.seed, r);
        auto pr = place_tree(s.host(), t, t_root, root_in_s, s.allowed(), s.vertices(), po);
        if (pr.map.empty()) continue;
        ExtendableState trial = s;
        for (auto [u, v] : t.edges()) trial.add_edge(pr.map[u], pr.map[v]);
        if (is_extendable(trial, opt.verify, opt.sample_trials, derive_seed(opt.seed, 100 + r),
                          opt.exhaustive_budget)
                .ok) {
            s = std::move(trial);
            return pr.map;
        }
    }
    throw SearchExhausted("extend_tree: no extendable copy found");
}

struct AlmostSpanningOptions {
    bool enforce_capacity = true;
    PlacementOptions placement;
};

inline int almost_spanning_capacity(int window, double d_exp, int delta) {
    return window - 4 * delta * static_cast<int>(std::ceil(window / (2 * d_exp) - 1e-9));
}

// Embeds t into w: non-leaf vertices by backtracking placement, leaves by
// max-flow.
inline Embedding embed_almost_spanning(const Graph& g, const VertexSet& w, const Tree& t,
                                       double d_exp, const AlmostSpanningOptions& opt = {}) {
    int delta = t.max_degree();
    if (opt.enforce_capacity) {
        int cap = almost_spanning_capacity(w.size(), d_exp, delta);
        if (t.n() > cap)
            throw CapacityExceeded("tree order " + std::to_string(t.n()) + " exceeds capacity " +
                                   std::to_string(cap));
    } else if (t.n() > w.size()) {
        throw CapacityExceeded("tree larger than window");
    }
    // root at a vertex of maximum degree
    int root = 0;
    for (int v = 1; v < t.n(); ++v)
        if (t.degree(v) > t.degree(root)) root = v;
    auto pr = place_tree(g, t, root, -1, w.bits(), Bitset(g.n()), opt.placement);
    if (pr.map.empty())
        throw EmbeddingFailed("no embedding after " + std::to_string(pr.attempts) + " attempts");
    return Embedding{pr.map};
}

inline double connect_min_length(int m, int d1) {
    return 2 * std::log(m) / std::log(d1) + 1;
}

struct ConnectOptions {
    bool strict = false;
    bool allow_fallback = true;
    uint64_t seed = 1;
    uint64_t budget = 1000000;
    int peel_trials = 200;
};

struct ConnectResult {
    int index = -1;
    std::vector<int> path;
    std::string route;  // "trees" or "dfs"
    int peeled = 0;     // vertices removed while pruning U
};

namespace detail {

// Greedy peeling of sets A with |A| <= m and |N(A,V)| < 2 d1 |A|.
inline int peel_bad_sets(const Graph& g, Bitset& v, int m, int d1, int trials, Rng& rng) {
    int removed = 0;
    auto bad = [&](const std::vector<int>& a) {
        Bitset ab(g.n());
        for (int x : a) ab.set(x);
        return external_neighborhood(g, ab).and_count(v) < 2 * d1 * static_cast<int>(a.size());
    };
    bool changed = true;
    while (changed) {
        changed = false;
        auto members = v.to_vector();
        int nv = static_cast<int>(members.size());
        for (int x : members)
            if (v.test(x) && bad({x})) {
                v.reset(x);
                ++removed;
                changed = true;
            }
        if (changed) continue;
        for (int j = 2; j <= std::min(m, nv) && !changed; ++j) {
            if (j <= 3 && binomial(nv, j) <= (uint64_t{1} << 22)) {
                std::vector<int> idx(j);
                std::iota(idx.begin(), idx.end(), 0);
                do {
                    std::vector<int> a;
                    for (int i : idx) a.push_back(members[i]);
                    if (bad(a)) {
                        for (int x : a) v.reset(x);
                        removed += j;
                        changed = true;
                        break;
                    }
                } while (next_combination(idx, nv));
            } else {
                for (int t = 0; t < trials && !changed; ++t) {
                    std::vector<int> a;
                    int seed_v = members[uniform_below(rng, nv)];
                    a.push_back(seed_v);
                    while (static_cast<int>(a.size()) < j) {
                        int base = a[uniform_below(rng, a.size())];
                        std::vector<int> nb;
                        for (int u : g.adj(base))
                            if (v.test(u) && std::find(a.begin(), a.end(), u) == a.end())
                                nb.push_back(u);
                        if (nb.empty()) break;
                        a.push_back(nb[uniform_below(rng, nb.size())]);
                    }
                    if (static_cast<int>(a.size()) == j && bad(a)) {
                        for (int x : a) v.reset(x);
                        removed += j;
                        changed = true;
                    }
                }
            }
        }
    }
    return removed;
}

// Path of `stub` edges from vertex 0 to a root carrying a full arity-ary tree
// of the given height; returns the tree and its deepest level.
inline Tree stub_tree(int stub, int arity, int height, std::vector<int>& last_level, int& root) {
    std::vector<std::pair<int, int>> e;
    int next = 1;
    int prev = 0;
    for (int i = 0; i < stub; ++i) {
        e.emplace_back(prev, next);
        prev = next++;
    }
    root = prev;
    std::vector<int> layer{root};
    for (int h = 0; h < height; ++h) {
        std::vector<int> nl;
        for (int p : layer)
            for (int c = 0; c < arity; ++c) {
                e.emplace_back(p, next);
                nl.push_back(next++);
            }
        layer = std::move(nl);
    }
    last_level = layer;
    return Tree(next, e);
}

}  // namespace detail

inline ConnectResult connect_exact_length(const Graph& g,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          const VertexSet& u, const std::vector<int>& lengths,
                                          int d1, int m, const ConnectOptions& opt = {}) {
    if (pairs.size() != lengths.size()) throw InvalidParameter("one length per pair");
    if (pairs.empty()) throw PreconditionViolated("no pairs to connect");
    for (int k : lengths) {
        if (2 * k > u.size())
            throw PreconditionViolated("k=" + std::to_string(k) + " > |U|/2=" +
                                       std::to_string(u.size() / 2.0));
        if (k < 1) throw PreconditionViolated("lengths must be positive");
    }
    if (opt.strict) {
        if (static_cast<int>(pairs.size()) != 2 * m)
            throw PreconditionViolated("need exactly 2m pairs");
        if (!(m >= d1 && d1 >= 2)) throw PreconditionViolated("need m >= d1 >= 2");
        if (u.size() < 20 * d1 * m)
            throw PreconditionViolated("|U|=" + std::to_string(u.size()) + " < 20*d1*m=" +
                                       std::to_string(20 * d1 * m));
        double lo = connect_min_length(m, d1);
        for (int k : lengths)
            if (k < lo - 1e-9)
                throw PreconditionViolated("k=" + std::to_string(k) + " < 2log m/log d1 + 1");
    }
    Rng rng(opt.seed);
    ConnectResult out;
    std::vector<int> members = u.members();
    shuffle_in_place(members, rng);
    int half = static_cast<int>(members.size()) / 2;
    Bitset v1(g.n()), v2(g.n());
    for (int i = 0; i < half; ++i) v1.set(members[i]);
    for (int i = half; i < static_cast<int>(members.size()); ++i) v2.set(members[i]);
    for (auto [x, y] : pairs) {
        v1.reset(x), v1.reset(y);
        v2.reset(x), v2.reset(y);
    }
    int peel_d = std::max(1, d1);
    out.peeled = detail::peel_bad_sets(g, v1, std::max(1, m), peel_d, opt.peel_trials, rng) +
                 detail::peel_bad_sets(g, v2, std::max(1, m), peel_d, opt.peel_trials, rng);
    int h = (m <= 1 || d1 < 2)
                ? 0
                : static_cast<int>(std::ceil(std::log(m) / std::log(d1) - 1e-12));
    int arity = std::max(2, d1);
    for (size_t j = 0; j < pairs.size(); ++j) {
        auto [x, y] = pairs[j];
        if (g.degree_into(x, v1) < 2 * d1 || g.degree_into(y, v2) < 2 * d1) continue;
        int k = lengths[j];
        int half_lo = k / 2, half_hi = k - k / 2;
        if (half_lo < 1) continue;
        // x-side: stub + height = half_lo - 1; y-side: stub + height = half_hi
        int h1 = std::min(h, half_lo - 1), h2 = std::min(h, half_hi);
        std::vector<int> last1, last2;
        int r1, r2;
        Tree t1 = detail::stub_tree(half_lo - 1 - h1, arity, h1, last1, r1);
        Tree t2 = detail::stub_tree(half_hi - h2, arity, h2, last2, r2);
        PlacementOptions po;
        po.budget = opt.budget;
        po.restarts = 2;
        po.seed = derive_seed(opt.seed, j);
        auto p1 = place_tree(g, t1, 0, x, v1, Bitset(g.n()), po);
        if (p1.map.empty()) continue;
        auto p2 = place_tree(g, t2, 0, y, v2, Bitset(g.n()), po);
        if (p2.map.empty()) continue;
        for (int a : last1)
            for (int b : last2) {
                if (!g.has_edge(p1.map[a], p2.map[b])) continue;
                auto q1 = t1.path_between(0, a);
                auto q2 = t2.path_between(b, 0);
                for (int v : q1) out.path.push_back(p1.map[v]);
                for (int v : q2) out.path.push_back(p2.map[v]);
                out.index = static_cast<int>(j);
                out.route = "trees";
                return out;
            }
    }
    if (opt.allow_fallback) {
        for (size_t j = 0; j < pairs.size(); ++j) {
            auto ps = find_exact_path(g, pairs[j].first, pairs[j].second, lengths[j], u.bits(),
                                      opt.budget / pairs.size() + 1);
            if (!ps.path.empty()) {
                out.index = static_cast<int>(j);
                out.path = std::move(ps.path);
                out.route = "dfs";
                return out;
            }
        }
    }
    throw SearchExhausted("connect: no pair could be joined (trees and search both failed)");
}

}  // namespace spanex
