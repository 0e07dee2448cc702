#pragma once

#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spanex/bitset.hpp"
#include "spanex/common.hpp"

namespace spanex {

// Immutable set of vertex ids over a fixed universe 0..n-1.
class VertexSet {
public:
    VertexSet() = default;
    explicit VertexSet(int universe) : bits_(universe) {}
    VertexSet(int universe, const std::vector<int>& members) : bits_(universe) {
        for (int v : members) {
            if (v < 0 || v >= universe)
                throw InvalidParameter("vertex " + std::to_string(v) + " outside universe " +
                                       std::to_string(universe));
            bits_.set(v);
        }
        members_ = bits_.to_vector();
    }
    explicit VertexSet(Bitset bits) : bits_(std::move(bits)), members_(bits_.to_vector()) {}

    static VertexSet all(int n) {
        Bitset b(n);
        b.set_all();
        return VertexSet(std::move(b));
    }

    int universe() const { return bits_.universe(); }
    int size() const { return static_cast<int>(members_.size()); }
    bool empty() const { return members_.empty(); }
    bool contains(int v) const { return v >= 0 && v < universe() && bits_.test(v); }
    const std::vector<int>& members() const { return members_; }
    const Bitset& bits() const { return bits_; }

    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    bool operator==(const VertexSet& o) const { return bits_ == o.bits_; }

    friend VertexSet operator|(const VertexSet& a, const VertexSet& b) {
        Bitset r = a.bits_;
        r |= b.bits_;
        return VertexSet(std::move(r));
    }
    friend VertexSet operator&(const VertexSet& a, const VertexSet& b) {
        Bitset r = a.bits_;
        r &= b.bits_;
        return VertexSet(std::move(r));
    }
    friend VertexSet operator-(const VertexSet& a, const VertexSet& b) {
        Bitset r = a.bits_;
        r.andnot(b.bits_);
        return VertexSet(std::move(r));
    }

private:
    Bitset bits_;
    std::vector<int> members_;
};

// Simple undirected graph on 0..n-1 with sorted adjacency lists and, for
// n <= kRowMirrorLimit, a bitset row per vertex.
class Graph {
public:
    static constexpr int kRowMirrorLimit = 8192;

    Graph() = default;
    Graph(int n, const std::vector<std::pair<int, int>>& edges) : n_(n), adj_(n) {
        if (n < 0) throw InvalidParameter("negative vertex count");
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw InvalidParameter("edge endpoint out of range");
            if (u == v) throw InvalidParameter("self-loop at " + std::to_string(u));
            adj_[u].push_back(v);
            adj_[v].push_back(u);
        }
        for (int v = 0; v < n; ++v) {
            auto& a = adj_[v];
            std::sort(a.begin(), a.end());
            if (std::adjacent_find(a.begin(), a.end()) != a.end())
                throw InvalidParameter("duplicate edge at vertex " + std::to_string(v));
        }
        m_ = static_cast<int64_t>(edges.size());
        if (n <= kRowMirrorLimit) {
            rows_.assign(n, Bitset(n));
            for (int v = 0; v < n; ++v)
                for (int u : adj_[v]) rows_[v].set(u);
        }
    }

    int n() const { return n_; }
    int64_t edge_count() const { return m_; }
    const std::vector<int>& adj(int v) const { return adj_[v]; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    bool has_rows() const { return !rows_.empty() || n_ == 0; }
    const Bitset& row(int v) const { return rows_[v]; }

    bool has_edge(int u, int v) const {
        if (!rows_.empty()) return rows_[u].test(v);
        return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
    }

    // |adj(v) ∩ s|
    int degree_into(int v, const Bitset& s) const {
        if (!rows_.empty()) return rows_[v].and_count(s);
        int c = 0;
        for (int u : adj_[v]) c += s.test(u);
        return c;
    }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(m_);
        for (int u = 0; u < n_; ++u)
            for (int v : adj_[u])
                if (u < v) out.emplace_back(u, v);
        return out;
    }

    bool is_regular() const {
        for (int v = 1; v < n_; ++v)
            if (degree(v) != degree(0)) return false;
        return true;
    }

    int min_degree() const {
        int d = n_ ? degree(0) : 0;
        for (int v = 1; v < n_; ++v) d = std::min(d, degree(v));
        return d;
    }

private:
    int n_ = 0;
    int64_t m_ = 0;
    std::vector<std::vector<int>> adj_;
    std::vector<Bitset> rows_;
};

// Union of neighbourhoods of s, minus s itself.
inline Bitset external_neighborhood(const Graph& g, const Bitset& s) {
    Bitset acc(g.n());
    if (g.has_rows()) {
        s.for_each([&](int v) { acc |= g.row(v); });
    } else {
        s.for_each([&](int v) {
            for (int u : g.adj(v)) acc.set(u);
        });
    }
    acc.andnot(s);
    return acc;
}

inline VertexSet neighborhood_into(const Graph& g, const VertexSet& x, const VertexSet& w) {
    Bitset acc = external_neighborhood(g, x.bits());
    acc &= w.bits();
    return VertexSet(std::move(acc));
}

// Ordered-pair count: an edge inside x ∩ y contributes 2.
inline int64_t edge_count_between(const Graph& g, const VertexSet& x, const VertexSet& y) {
    int64_t total = 0;
    for (int u : x) total += g.degree_into(u, y.bits());
    return total;
}

struct JoinedCheck {
    bool joined = true;
    std::vector<int> x, y;
};

// First m-set (lexicographic) that has m non-neighbours outside itself.
inline JoinedCheck find_unjoined_pair(const Graph& g, int m, uint64_t budget) {
    JoinedCheck out;
    int n = g.n();
    if (m < 1 || 2 * m > n) return out;
    uint64_t cost = binomial(n, m);
    if (cost > budget)
        throw SizeLimitExceeded("joinedness check needs " + std::to_string(cost) +
                                " subset evaluations, budget " + std::to_string(budget));
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    do {
        Bitset xs(n);
        for (int v : idx) xs.set(v);
        Bitset outside = external_neighborhood(g, xs);
        outside |= xs;
        if (n - outside.count() >= m) {
            out.joined = false;
            out.x = idx;
            for (int v = 0; v < n && static_cast<int>(out.y.size()) < m; ++v)
                if (!outside.test(v)) out.y.push_back(v);
            return out;
        }
    } while (next_combination(idx, n));
    return out;
}

inline JoinedCheck is_m_joined_exact(const Graph& g, int m,
                                     uint64_t budget = kDefaultExhaustiveBudget) {
    if (m < 1 || 2 * m > g.n())
        throw InvalidParameter("m must satisfy 1 <= m <= n/2");
    return find_unjoined_pair(g, m, budget);
}

inline Graph read_edge_list(std::istream& in) {
    int64_t n, m;
    if (!(in >> n >> m) || n < 0 || m < 0) throw ParseError("bad edge-list header");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(m);
    for (int64_t i = 0; i < m; ++i) {
        int u, v;
        if (!(in >> u >> v)) throw ParseError("truncated edge list at edge " + std::to_string(i));
        edges.emplace_back(u, v);
    }
    try {
        return Graph(static_cast<int>(n), edges);
    } catch (const InvalidParameter& e) {
        throw ParseError(e.what());
    }
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.n() << ' ' << g.edge_count() << '\n';
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

namespace families {

inline Graph complete(int n) {
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) e.emplace_back(u, v);
    return Graph(n, e);
}

inline Graph cycle(int n) {
    std::vector<std::pair<int, int>> e;
    for (int v = 0; v < n; ++v) e.emplace_back(v, (v + 1) % n);
    return Graph(n, e);
}

inline Graph path(int n) {
    std::vector<std::pair<int, int>> e;
    for (int v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
    return Graph(n, e);
}

inline Graph empty(int n) { return Graph(n, {}); }

// Sides 0..a-1 and a..a+b-1.
inline Graph complete_bipartite(int a, int b) {
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < a; ++u)
        for (int v = 0; v < b; ++v) e.emplace_back(u, a + v);
    return Graph(a + b, e);
}

inline Graph star(int leaves) { return complete_bipartite(1, leaves); }

// Outer 5-cycle 0..4, spokes i -> i+5, inner pentagram.
inline Graph petersen() {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < 5; ++i) {
        e.emplace_back(i, (i + 1) % 5);
        e.emplace_back(i, i + 5);
        e.emplace_back(5 + i, 5 + (i + 2) % 5);
    }
    return Graph(10, e);
}

// Connection set given by offsets in 1..n/2.
inline Graph circulant(int n, const std::vector<int>& offsets) {
    std::vector<std::pair<int, int>> e;
    for (int v = 0; v < n; ++v)
        for (int s : offsets) {
            int u = (v + s) % n;
            if (2 * s == n && u < v) continue;
            e.emplace_back(v, u);
        }
    return Graph(n, e);
}

// Complete graph minus a perfect matching {2i, 2i+1}.
inline Graph complete_minus_matching(int n) {
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (!(u % 2 == 0 && v == u + 1)) e.emplace_back(u, v);
    return Graph(n, e);
}

}  // namespace families

}  // namespace spanex
