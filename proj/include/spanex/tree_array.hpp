#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/extendable.hpp"
#include "spanex/graph.hpp"
#include "spanex/tree.hpp"

namespace spanex {

// Host image of a rooted tree; parent[i] is the host parent of vertices[i]
// (-1 for the root, which comes first).
struct RootedImage {
    int root = -1;
    std::vector<int> vertices;
    std::vector<int> parent;
};

struct TreeArray {
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::vector<int>> paths;  // paths[i] runs pairs[i].first -> pairs[i].second
    std::vector<RootedImage> trees;       // one per internal path vertex, in path order

    const RootedImage* tree_at(int v) const {
        for (const auto& t : trees)
            if (t.root == v) return &t;
        return nullptr;
    }
    int vertex_count() const {
        int c = 0;
        for (const auto& p : paths) c += static_cast<int>(p.size());
        for (const auto& t : trees) c += static_cast<int>(t.vertices.size()) - 1;
        return c;
    }
};

inline int ary_tree_order(int delta, int height) {
    int n = 1, layer = 1;
    for (int i = 0; i < height; ++i) {
        layer *= delta;
        n += layer;
    }
    return n;
}

struct TreeArrayCheck {
    bool ok = true;
    std::string violation;
};

// pruned = true accepts any subtree of the full tree that keeps the root.
inline TreeArrayCheck verify_tree_array(const Graph& g, const TreeArray& arr, const VertexSet& w,
                                        const std::vector<std::pair<int, int>>& pairs, int s,
                                        int delta, bool pruned = false) {
    TreeArrayCheck out;
    auto fail = [&](const std::string& why) {
        out.ok = false;
        out.violation = why;
        return out;
    };
    int n = g.n();
    if (arr.paths.size() != pairs.size()) return fail("one path per pair required");
    std::vector<int> owner(n, -1);  // path index owning each path vertex
    for (auto [x, y] : pairs) {
        if (x < 0 || y < 0 || x >= n || y >= n || x == y) return fail("bad pair");
        if (w.contains(x) || w.contains(y)) return fail("pair vertex inside W");
    }
    std::vector<int> internals;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = arr.paths[i];
        if (static_cast<int>(p.size()) != s + 1) return fail("path length differs from s");
        if (p.front() != pairs[i].first || p.back() != pairs[i].second)
            return fail("path endpoints differ from pair");
        for (size_t j = 0; j < p.size(); ++j) {
            int v = p[j];
            if (v < 0 || v >= n) return fail("path vertex out of range");
            if (owner[v] >= 0) return fail("paths not disjoint");
            owner[v] = static_cast<int>(i);
            if (j + 1 < p.size() && !g.has_edge(v, p[j + 1])) return fail("path edge missing");
            if (j > 0 && j + 1 < p.size()) {
                if (!w.contains(v)) return fail("path internal vertex outside W");
                internals.push_back(v);
            }
        }
    }
    std::vector<char> in_tree(n, 0);
    int full = ary_tree_order(delta, s);
    if (arr.trees.size() != internals.size()) return fail("one tree per internal vertex required");
    for (int v : internals) {
        const RootedImage* t = arr.tree_at(v);
        if (!t) return fail("internal vertex " + std::to_string(v) + " has no tree");
        if (t->vertices.empty() || t->vertices[0] != v || t->parent[0] != -1)
            return fail("tree not rooted at its path vertex");
        if (t->parent.size() != t->vertices.size()) return fail("malformed tree image");
        if (!pruned && static_cast<int>(t->vertices.size()) != full)
            return fail("tree at " + std::to_string(v) + " is not a full tree of height s");
        std::vector<int> depth(n, -1), children(n, 0);
        depth[v] = 0;
        for (size_t i = 0; i < t->vertices.size(); ++i) {
            int x = t->vertices[i];
            if (x < 0 || x >= n) return fail("tree vertex out of range");
            if (in_tree[x]) return fail("trees not disjoint");
            in_tree[x] = 1;
            if (i == 0) continue;
            if (!w.contains(x)) return fail("tree vertex outside W");
            if (owner[x] >= 0) return fail("tree meets a path outside its root");
            int p = t->parent[i];
            if (p < 0 || p >= n || depth[p] < 0) return fail("tree parent not placed earlier");
            if (!g.has_edge(p, x)) return fail("tree edge missing from host");
            depth[x] = depth[p] + 1;
            if (depth[x] > s) return fail("tree deeper than s");
            if (++children[p] > delta) return fail("tree vertex with more than delta children");
        }
        if (!pruned)
            for (int x : t->vertices)
                if (depth[x] < s && children[x] != delta)
                    return fail("tree at " + std::to_string(v) + " is not full");
    }
    return out;
}

struct TreeArrayOptions {
    bool strict = false;  // construction bounds become hard errors
    ExtendOptions extend;
};

struct TreeArrayResult {
    TreeArray array;
    std::vector<std::string> warnings;  // relaxed bounds in desk mode
};

inline std::vector<std::string> tree_array_bound_report(int w_size, int pairs, int s, int delta,
                                                        int d1, int m) {
    std::vector<std::string> out;
    std::ostringstream os;
    if (d1 < delta + 2) {
        os << "d1 >= delta+2 fails: d1=" << d1 << ", delta+2=" << delta + 2;
        out.push_back(os.str());
        os.str("");
    }
    if (d1 >= 3 && m >= 1) {
        int smin = 2 * extend_path_k(d1, m) + 1;
        if (s < smin) {
            os << "s >= 2*ceil(log 2m/log(d1-1))+1 fails: s=" << s << ", bound=" << smin;
            out.push_back(os.str());
            os.str("");
        }
    }
    double need = 10.0 * d1 * m + static_cast<double>(pairs) * (s + 1) * std::pow(delta, s + 1);
    if (!(w_size > need)) {
        os << "|W| > 10*d1*m + t(s+1)delta^(s+1) fails: |W|=" << w_size << ", bound=" << need;
        out.push_back(os.str());
    }
    return out;
}

// Paths first, then a full delta-ary tree of height s at every internal
// vertex, all grown inside one extendable subgraph over W plus the pairs.
inline TreeArrayResult build_tree_array(const Graph& g, const VertexSet& w,
                                        const std::vector<std::pair<int, int>>& pairs, int s,
                                        int delta, int d1, int m,
                                        const TreeArrayOptions& opt = {}) {
    TreeArrayResult out;
    out.array.pairs = pairs;
    if (pairs.empty()) return out;
    if (s < 1) throw InvalidParameter("s must be >= 1");
    if (delta < 1) throw InvalidParameter("delta must be >= 1");
    Bitset allowed = w.bits();
    for (auto [x, y] : pairs) {
        if (w.contains(x) || w.contains(y)) throw PreconditionViolated("pair vertex inside W");
        if (allowed.test(x) || allowed.test(y) || x == y)
            throw PreconditionViolated("pairs must be disjoint");
        allowed.set(x);
        allowed.set(y);
    }
    out.warnings =
        tree_array_bound_report(w.size(), static_cast<int>(pairs.size()), s, delta, d1, m);
    if (opt.strict && !out.warnings.empty()) throw PreconditionViolated(out.warnings.front());
    ExtendableState st(g, std::max(d1, delta + 2), std::max(m, 1), allowed);
    for (auto [x, y] : pairs) {
        st.add_vertex(x);
        st.add_vertex(y);
    }
    ExtendOptions eo = opt.extend;
    eo.check_bounds = opt.strict;
    for (size_t i = 0; i < pairs.size(); ++i) {
        eo.seed = derive_seed(opt.extend.seed, i);
        try {
            out.array.paths.push_back(extend_path(st, pairs[i].first, pairs[i].second, s, eo));
        } catch (const SearchExhausted& e) {
            throw SearchExhausted(std::string("tree array path stage: ") + e.what());
        }
    }
    Tree shape = tree_families::complete_ary(delta, s);
    auto par = shape.parents(0);
    auto order = shape.bfs_order(0);
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = out.array.paths[i];
        for (size_t j = 1; j + 1 < p.size(); ++j) {
            eo.seed = derive_seed(opt.extend.seed, 1000 + i * 64 + j);
            std::vector<int> map;
            try {
                map = extend_tree(st, p[j], shape, 0, eo);
            } catch (const SearchExhausted& e) {
                throw SearchExhausted(std::string("tree array tree stage: ") + e.what());
            }
            RootedImage img;
            img.root = p[j];
            for (int v : order) {
                img.vertices.push_back(map[v]);
                img.parent.push_back(par[v] < 0 ? -1 : map[par[v]]);
            }
            out.array.trees.push_back(std::move(img));
        }
    }
    return out;
}

// Keeps, in every tree, the vertices accepted by keep (host id, depth); a
// rejected vertex takes its subtree with it.
template <class Keep>
TreeArray prune_tree_array(const TreeArray& arr, Keep keep) {
    TreeArray out = arr;
    for (auto& t : out.trees) {
        RootedImage r;
        std::vector<std::pair<int, int>> kept;  // host id, depth
        auto depth_of = [&](int v) {
            for (auto& [x, d] : kept)
                if (x == v) return d;
            return -1;
        };
        for (size_t i = 0; i < t.vertices.size(); ++i) {
            int x = t.vertices[i];
            if (i == 0) {
                r.root = x;
                r.vertices.push_back(x);
                r.parent.push_back(-1);
                kept.emplace_back(x, 0);
                continue;
            }
            int pd = depth_of(t.parent[i]);
            if (pd < 0 || !keep(x, pd + 1)) continue;
            r.vertices.push_back(x);
            r.parent.push_back(t.parent[i]);
            kept.emplace_back(x, pd + 1);
        }
        t = std::move(r);
    }
    return out;
}

struct Inequality {
    std::string name;
    double lhs = 0, rhs = 0;
    bool holds = false;
};

struct RecParameters {
    int log_base = 2;
    double h = 0;  // sqrt(log n)
    int s_min = 0, s_max = 0;
    int m_bound = 0;  // floor(n / 2d)
    double d1 = 0;    // delta^(2h)
    std::vector<Inequality> chain;
};

inline RecParameters rec_parameters(double n, double d, int delta) {
    if (!(n >= 2) || !(d >= 1) || delta < 2) throw InvalidParameter("need n >= 2, d >= 1, delta >= 2");
    RecParameters r;
    double logn = std::log2(n);
    r.h = std::sqrt(logn);
    r.s_min = static_cast<int>(std::ceil(r.h - 1 - 1e-9));
    r.s_max = static_cast<int>(std::floor(2 * r.h - 1 + 1e-9));
    r.m_bound = static_cast<int>(std::floor(n / (2 * d) + 1e-9));
    r.d1 = std::pow(delta, 2 * r.h);
    double m = r.m_bound;
    Inequality regime{"d >= delta^(5h)", d, std::pow(delta, 5 * r.h), false};
    regime.holds = regime.lhs >= regime.rhs;
    double k = m >= 1 ? std::ceil(std::log2(2 * m) / std::log2(r.d1 - 1) - 1e-12) : 0;
    Inequality sbound{"2*ceil(log 2m/log(d1-1))+1 <= h-1", 2 * k + 1, r.h - 1, false};
    sbound.holds = sbound.lhs <= sbound.rhs + 1e-9;
    double s = r.s_max;
    Inequality size{"10*d1*m + m(s+1)delta^(s+1) <= n/delta^(5h/2)",
                    10 * r.d1 * m + m * (s + 1) * std::pow(delta, s + 1),
                    n / std::pow(delta, 2.5 * r.h), false};
    size.holds = size.lhs <= size.rhs;
    r.chain = {regime, sbound, size};
    return r;
}

}  // namespace spanex
