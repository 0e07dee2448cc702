#pragma once

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"

namespace spanex {

// Unrooted tree on 0..n-1. labels() maps local ids back to the ids of the
// tree this one was cut from (identity for a fresh tree).
class Tree {
public:
    Tree() = default;
    Tree(int n, const std::vector<std::pair<int, int>>& edges) : adj_(n) {
        if (n < 1) throw InvalidParameter("tree needs at least one vertex");
        if (static_cast<int>(edges.size()) != n - 1)
            throw InvalidParameter("tree on " + std::to_string(n) + " vertices needs n-1 edges");
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n || v >= n || u == v)
                throw InvalidParameter("bad tree edge");
            adj_[u].push_back(v);
            adj_[v].push_back(u);
        }
        for (auto& a : adj_) std::sort(a.begin(), a.end());
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : adj_[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    ++count;
                    stack.push_back(u);
                }
        }
        if (count != n) throw InvalidParameter("tree edges do not form a connected graph");
        labels_.resize(n);
        std::iota(labels_.begin(), labels_.end(), 0);
    }

    static Tree from_parents(const std::vector<int>& parent) {
        int n = static_cast<int>(parent.size());
        std::vector<std::pair<int, int>> e;
        int roots = 0;
        for (int v = 0; v < n; ++v) {
            if (parent[v] < 0)
                ++roots;
            else
                e.emplace_back(parent[v], v);
        }
        if (roots != 1) throw InvalidParameter("parent array needs exactly one root");
        return Tree(n, e);
    }

    int n() const { return static_cast<int>(adj_.size()); }
    const std::vector<int>& adj(int v) const { return adj_[v]; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    bool is_leaf(int v) const { return degree(v) == 1; }

    int max_degree() const {
        int d = 0;
        for (const auto& a : adj_) d = std::max(d, static_cast<int>(a.size()));
        return d;
    }

    std::vector<int> leaves() const {
        std::vector<int> out;
        for (int v = 0; v < n(); ++v)
            if (is_leaf(v)) out.push_back(v);
        return out;
    }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int u = 0; u < n(); ++u)
            for (int v : adj_[u])
                if (u < v) out.emplace_back(u, v);
        return out;
    }

    const std::vector<int>& labels() const { return labels_; }
    int label(int v) const { return labels_[v]; }

    std::vector<int> bfs_order(int root) const {
        std::vector<int> order{root};
        std::vector<char> seen(n(), 0);
        seen[root] = 1;
        for (size_t i = 0; i < order.size(); ++i)
            for (int u : adj_[order[i]])
                if (!seen[u]) {
                    seen[u] = 1;
                    order.push_back(u);
                }
        return order;
    }

    std::vector<int> parents(int root = 0) const {
        std::vector<int> par(n(), -1);
        std::vector<char> seen(n(), 0);
        seen[root] = 1;
        for (int v : bfs_order(root))
            for (int u : adj_[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    par[u] = v;
                }
        return par;
    }

    std::vector<int> distances(int from) const {
        std::vector<int> dist(n(), -1);
        dist[from] = 0;
        for (int v : bfs_order(from))
            for (int u : adj_[v])
                if (dist[u] < 0) dist[u] = dist[v] + 1;
        return dist;
    }

    std::vector<int> path_between(int a, int b) const {
        auto par = parents(a);
        std::vector<int> p{b};
        while (p.back() != a) p.push_back(par[p.back()]);
        std::reverse(p.begin(), p.end());
        return p;
    }

    // Induced subtree on keep (must be connected); labels compose.
    Tree induced(const std::vector<int>& keep) const {
        std::vector<int> local(n(), -1);
        for (size_t i = 0; i < keep.size(); ++i) local[keep[i]] = static_cast<int>(i);
        std::vector<std::pair<int, int>> e;
        for (int v : keep)
            for (int u : adj_[v])
                if (local[u] >= 0 && v < u) e.emplace_back(local[v], local[u]);
        Tree t(static_cast<int>(keep.size()), e);
        for (size_t i = 0; i < keep.size(); ++i) t.labels_[i] = labels_[keep[i]];
        return t;
    }

private:
    std::vector<std::vector<int>> adj_;
    std::vector<int> labels_;
};

// Non-leaves of t; on two vertices the lower id survives.
inline Tree strip_leaves(const Tree& t) {
    if (t.n() < 2) throw InvalidParameter("strip_leaves needs n >= 2");
    if (t.n() == 2) return t.induced({0});
    std::vector<int> keep;
    for (int v = 0; v < t.n(); ++v)
        if (!t.is_leaf(v)) keep.push_back(v);
    return t.induced(keep);
}

struct TreeDecomposition {
    std::vector<Tree> levels;                   // levels[i] = T_i, labels are ids in T
    std::vector<std::vector<int>> leaf_sets;    // L_i as ids in T
    std::vector<int> sizes;                     // n_i
    std::vector<int> depth;                     // per vertex of T: largest i with v in T_i
};

inline TreeDecomposition decompose_levels(const Tree& t, int h) {
    if (h < 0) throw InvalidParameter("h must be >= 0");
    TreeDecomposition out;
    out.levels.push_back(t);
    out.depth.assign(t.n(), 0);
    for (int i = 1; i <= h && out.levels.back().n() > 1; ++i)
        out.levels.push_back(strip_leaves(out.levels.back()));
    int delta = t.max_degree();
    for (size_t i = 0; i < out.levels.size(); ++i) {
        const Tree& ti = out.levels[i];
        out.sizes.push_back(ti.n());
        std::vector<int> ls;
        for (int v = 0; v < ti.n(); ++v) {
            out.depth[ti.label(v)] = static_cast<int>(i);
            if (ti.n() == 1 || ti.is_leaf(v)) ls.push_back(ti.label(v));
        }
        std::sort(ls.begin(), ls.end());
        out.leaf_sets.push_back(ls);
        double ball = 0, pw = 1;
        for (size_t j = 0; j <= i; ++j) {
            ball += pw;
            pw *= delta;
        }
        if (static_cast<double>(ti.n()) * ball < t.n())
            throw std::logic_error("level size bound violated at level " + std::to_string(i));
    }
    return out;
}

struct PendantStar {
    int root = -1;
    int center = -1;
    std::vector<int> leaves;
};

struct Caterpillar {
    std::vector<int> spine;              // central path, length k
    std::vector<std::vector<int>> legs;  // legs[i] hang on spine[i]; empty at the ends
};

struct Dichotomy {
    enum class Branch { Leaves, BarePaths, PendantStars, Caterpillars };
    Branch branch = Branch::Leaves;
    double threshold = 0;
    std::vector<int> leaves;
    std::vector<std::vector<int>> paths;  // each has k+1 vertices
    std::vector<PendantStar> stars;
    std::vector<Caterpillar> caterpillars;

    size_t payload_size() const {
        switch (branch) {
            case Branch::Leaves: return leaves.size();
            case Branch::BarePaths: return paths.size();
            case Branch::PendantStars: return stars.size();
            case Branch::Caterpillars: return caterpillars.size();
        }
        return 0;
    }
};

inline const char* branch_name(Dichotomy::Branch b) {
    switch (b) {
        case Dichotomy::Branch::Leaves: return "LEAVES";
        case Dichotomy::Branch::BarePaths: return "BARE_PATHS";
        case Dichotomy::Branch::PendantStars: return "PENDANT_STARS";
        case Dichotomy::Branch::Caterpillars: return "CATERPILLARS";
    }
    return "?";
}

// Maximal paths whose internal vertices have degree two, as vertex lists.
inline std::vector<std::vector<int>> maximal_bare_paths(const Tree& t) {
    std::vector<std::vector<int>> out;
    int n = t.n();
    if (n < 2) return out;
    std::vector<char> used(n, 0);
    for (int s = 0; s < n; ++s) {
        if (t.degree(s) == 2) continue;
        for (int first : t.adj(s)) {
            if (t.degree(first) == 2 && used[first]) continue;
            std::vector<int> p{s, first};
            int prev = s, cur = first;
            while (t.degree(cur) == 2) {
                used[cur] = 1;
                int nxt = t.adj(cur)[0] == prev ? t.adj(cur)[1] : t.adj(cur)[0];
                prev = cur;
                cur = nxt;
                p.push_back(cur);
            }
            // each maximal path is found from both ends; keep one copy
            if (p.size() == 2 && s > first) continue;
            out.push_back(std::move(p));
        }
    }
    return out;
}

inline Dichotomy leaf_or_barepath(const Tree& t, int k) {
    if (k < 1) throw InvalidParameter("k must be positive");
    Dichotomy out;
    out.threshold = t.n() / (4.0 * k);
    out.leaves = t.leaves();
    if (out.leaves.size() >= out.threshold) {
        out.branch = Dichotomy::Branch::Leaves;
        return out;
    }
    out.leaves.clear();
    out.branch = Dichotomy::Branch::BarePaths;
    // maximal paths may share branch endpoints; keep the segments disjoint
    std::vector<char> used(t.n(), 0);
    for (const auto& p : maximal_bare_paths(t)) {
        int len = static_cast<int>(p.size()) - 1;
        for (int start = 0; start + k <= len;) {
            int clash = -1;
            for (int i = start; i <= start + k; ++i)
                if (used[p[i]]) clash = i;
            if (clash >= 0) {
                start = clash + 1;
                continue;
            }
            for (int i = start; i <= start + k; ++i) used[p[i]] = 1;
            out.paths.emplace_back(p.begin() + start, p.begin() + start + k + 1);
            start += k + 1;
        }
    }
    if (out.paths.size() < out.threshold)
        throw std::logic_error("neither leaves nor bare paths reach n/4k");
    return out;
}

// One record per leaf of T'; empty when T' is a single vertex.
inline std::vector<PendantStar> pendant_stars(const Tree& t) {
    std::vector<PendantStar> out;
    if (t.n() < 3) return out;
    Tree tp = strip_leaves(t);
    if (tp.n() < 2) return out;
    for (int c = 0; c < tp.n(); ++c) {
        if (!tp.is_leaf(c)) continue;
        PendantStar s;
        s.center = tp.label(c);
        s.root = tp.label(tp.adj(c)[0]);
        for (int u : t.adj(s.center))
            if (t.is_leaf(u)) s.leaves.push_back(u);
        out.push_back(std::move(s));
    }
    return out;
}

inline Dichotomy star_or_caterpillar(const Tree& t, int k) {
    if (t.max_degree() < 2) throw InvalidParameter("star_or_caterpillar needs max degree >= 2");
    if (t.n() < 3) throw InvalidParameter("star_or_caterpillar needs n >= 3");
    Tree tp = strip_leaves(t);
    if (tp.n() < 2)
        throw InvalidParameter("tree is a star; pendant-star root is undefined");
    Dichotomy inner = leaf_or_barepath(tp, k);
    Dichotomy out;
    out.threshold = t.n() / (4.0 * k * t.max_degree());
    if (inner.branch == Dichotomy::Branch::Leaves) {
        out.branch = Dichotomy::Branch::PendantStars;
        out.stars = pendant_stars(t);
    } else {
        out.branch = Dichotomy::Branch::Caterpillars;
        for (const auto& p : inner.paths) {
            Caterpillar c;
            for (int v : p) c.spine.push_back(tp.label(v));
            c.legs.resize(c.spine.size());
            for (size_t i = 1; i + 1 < c.spine.size(); ++i)
                for (int u : t.adj(c.spine[i]))
                    if (t.is_leaf(u)) c.legs[i].push_back(u);
            out.caterpillars.push_back(std::move(c));
        }
    }
    if (out.payload_size() < out.threshold)
        throw std::logic_error("neither pendant stars nor caterpillars reach n/4kΔ");
    return out;
}

// Degree-capped random attachment. With probability locality the new vertex
// hangs off the previous one when that still has room, which yields long
// bare stretches.
inline Tree random_bounded_tree(int n, int delta, uint64_t seed, double locality = 0.0) {
    if (n < 1) throw InvalidParameter("n must be >= 1");
    if (delta < 2 && n > 2) throw InvalidParameter("delta must be >= 2");
    Rng rng(seed);
    std::vector<int> deg(n, 0);
    std::vector<int> open{0};
    std::vector<int> pos(n, -1);
    pos[0] = 0;
    std::vector<std::pair<int, int>> e;
    auto close = [&](int v) {
        int i = pos[v];
        pos[open.back()] = i;
        std::swap(open[i], open.back());
        open.pop_back();
        pos[v] = -1;
    };
    for (int v = 1; v < n; ++v) {
        int p;
        if (locality > 0 && pos[v - 1] >= 0 && uniform_unit(rng) < locality)
            p = v - 1;
        else
            p = open[uniform_below(rng, open.size())];
        e.emplace_back(p, v);
        if (++deg[p] >= delta) close(p);
        ++deg[v];
        if (deg[v] < delta) {
            pos[v] = static_cast<int>(open.size());
            open.push_back(v);
        }
    }
    return Tree(n, e);
}

inline Tree read_tree(std::istream& in) {
    int n;
    if (!(in >> n) || n < 1) throw ParseError("bad tree header");
    std::vector<int> par(n);
    for (int i = 0; i < n; ++i)
        if (!(in >> par[i]) || par[i] < -1 || par[i] >= n) throw ParseError("bad parent entry");
    try {
        return Tree::from_parents(par);
    } catch (const InvalidParameter& e) {
        throw ParseError(e.what());
    }
}

inline void write_tree(std::ostream& out, const Tree& t, int root = 0) {
    auto par = t.parents(root);
    out << t.n() << '\n';
    for (int i = 0; i < t.n(); ++i) out << (i ? " " : "") << par[i];
    out << '\n';
}

namespace tree_families {

inline Tree path(int n) {
    std::vector<std::pair<int, int>> e;
    for (int v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
    return Tree(n, e);
}

inline Tree star(int leaves) {
    std::vector<std::pair<int, int>> e;
    for (int v = 1; v <= leaves; ++v) e.emplace_back(0, v);
    return Tree(leaves + 1, e);
}

// Complete binary tree of the given height (root at 0, heap order).
inline Tree complete_binary(int height) {
    int n = (1 << (height + 1)) - 1;
    std::vector<std::pair<int, int>> e;
    for (int v = 1; v < n; ++v) e.emplace_back((v - 1) / 2, v);
    return Tree(n, e);
}

// Complete delta-ary tree of the given height (heap order).
inline Tree complete_ary(int arity, int height) {
    int n = 1, layer = 1;
    for (int i = 0; i < height; ++i) {
        layer *= arity;
        n += layer;
    }
    std::vector<std::pair<int, int>> e;
    for (int v = 1; v < n; ++v) e.emplace_back((v - 1) / arity, v);
    return Tree(n, e);
}

// Center 0 with legs of the given length.
inline Tree spider(int legs, int length) {
    std::vector<std::pair<int, int>> e;
    int next = 1;
    for (int l = 0; l < legs; ++l) {
        int prev = 0;
        for (int i = 0; i < length; ++i) {
            e.emplace_back(prev, next);
            prev = next++;
        }
    }
    return Tree(next, e);
}

// Spine 0..spine-1, each spine vertex gets legs_per leaves.
inline Tree caterpillar(int spine, int legs_per) {
    std::vector<std::pair<int, int>> e;
    for (int v = 0; v + 1 < spine; ++v) e.emplace_back(v, v + 1);
    int next = spine;
    for (int v = 0; v < spine; ++v)
        for (int j = 0; j < legs_per; ++j) e.emplace_back(v, next++);
    return Tree(next, e);
}

// Two adjacent centers 0 and 1, each with `leaves` leaves.
inline Tree double_star(int leaves) {
    std::vector<std::pair<int, int>> e{{0, 1}};
    int next = 2;
    for (int c = 0; c < 2; ++c)
        for (int j = 0; j < leaves; ++j) e.emplace_back(c, next++);
    return Tree(next, e);
}

}  // namespace tree_families

}  // namespace spanex
