#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spanex/bitset.hpp"
#include "spanex/common.hpp"
#include "spanex/graph.hpp"
#include "spanex/matching.hpp"
#include "spanex/tree.hpp"

namespace spanex {

struct PathSearch {
    std::vector<int> path;  // empty on failure
    bool exhausted = false;
    uint64_t expansions = 0;
};

// DFS for an (a,b)-path with exactly len edges whose internal vertices lie in
// pool. Candidates go in ascending degree into pool; noise > 0 perturbs the
// order.
inline PathSearch find_exact_path(const Graph& g, int a, int b, int len, const Bitset& pool,
                                  uint64_t budget, Rng* noise = nullptr) {
    PathSearch out;
    if (len < 1 || a == b) return out;
    if (len == 1) {
        if (g.has_edge(a, b)) out.path = {a, b};
        return out;
    }
    int n = g.n();
    Bitset avail = pool;
    if (a < n) avail.reset(a);
    avail.reset(b);
    // distance to b with internals in pool; lower bound once vertices are used
    std::vector<int> dist(n, -1);
    std::vector<int> q;
    for (int v : g.adj(b))
        if (avail.test(v)) {
            dist[v] = 1;
            q.push_back(v);
        }
    for (size_t i = 0; i < q.size(); ++i) {
        int v = q[i];
        if (dist[v] >= len - 1) continue;
        for (int u : g.adj(v))
            if (avail.test(u) && dist[u] < 0) {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
    }
    std::vector<double> key(n, 0);
    for (int v : q) {
        key[v] = g.degree_into(v, avail);
        if (noise) key[v] += 3.0 * uniform_unit(*noise);
    }
    std::vector<int> path{a};
    std::vector<std::vector<int>> cands(len);
    std::vector<size_t> ptr(len, 0);
    auto fill = [&](int depth) {
        int cur = path.back();
        int remaining = len - depth;  // edges still to place from cur
        auto& c = cands[depth];
        c.clear();
        ptr[depth] = 0;
        if (remaining == 1) return;
        for (int v : g.adj(cur))
            if (avail.test(v) && dist[v] >= 0 && dist[v] <= remaining - 1) c.push_back(v);
        std::stable_sort(c.begin(), c.end(), [&](int x, int y) { return key[x] < key[y]; });
    };
    int depth = 0;
    fill(0);
    while (true) {
        if (len - depth == 1) {
            if (g.has_edge(path.back(), b)) {
                path.push_back(b);
                out.path = std::move(path);
                return out;
            }
        } else if (ptr[depth] < cands[depth].size()) {
            int v = cands[depth][ptr[depth]++];
            if (!avail.test(v)) continue;
            if (++out.expansions > budget) {
                out.exhausted = true;
                return out;
            }
            avail.reset(v);
            path.push_back(v);
            ++depth;
            fill(depth);
            continue;
        }
        // backtrack
        if (depth == 0) return out;
        avail.set(path.back());
        path.pop_back();
        --depth;
    }
}

struct PlacementOptions {
    uint64_t budget = 1000000;  // candidate tries per attempt
    int restarts = 6;
    uint64_t seed = 1;
    bool leaves_by_flow = true;
};

struct PlacementResult {
    std::vector<int> map;  // tree vertex -> host vertex; empty on failure
    bool exhausted = false;
    int attempts = 0;
};

namespace detail {

inline bool place_tree_attempt(const Graph& g, const Tree& t, int t_root, int host_root,
                               const Bitset& window, const Bitset& blocked, uint64_t budget,
                               Rng* noise, bool leaves_by_flow, std::vector<int>& img,
                               bool& exhausted) {
    int n = g.n();
    Bitset free = window;
    free.andnot(blocked);
    if (host_root >= 0) free.reset(host_root);
    auto par = t.parents(t_root);
    auto order = t.bfs_order(t_root);
    std::vector<int> need(t.n(), 0);
    for (int v = 0; v < t.n(); ++v)
        if (par[v] >= 0) ++need[par[v]];
    std::vector<char> by_flow(t.n(), 0);
    if (leaves_by_flow)
        for (int v = 0; v < t.n(); ++v)
            if (v != t_root && t.degree(v) == 1) by_flow[v] = 1;
    std::vector<int> seq;
    for (int v : order)
        if (!by_flow[v]) seq.push_back(v);
    img.assign(t.n(), -1);
    size_t start = 0;
    if (host_root >= 0) {
        img[t_root] = host_root;
        if (g.degree_into(host_root, free) < need[t_root]) return false;
        start = 1;
    }
    std::vector<std::vector<int>> cands(seq.size());
    std::vector<size_t> ptr(seq.size(), 0);
    auto fill = [&](size_t i) {
        int v = seq[i];
        auto& c = cands[i];
        c.clear();
        ptr[i] = 0;
        std::vector<std::pair<double, int>> keyed;
        auto consider = [&](int x) {
            int fd = g.degree_into(x, free);
            if (fd < need[v]) return;
            double k = fd;
            if (noise) k *= 1.0 + 0.5 * uniform_unit(*noise);
            keyed.emplace_back(k, x);
        };
        if (par[v] < 0) {
            free.for_each(consider);
        } else {
            for (int x : g.adj(img[par[v]]))
                if (free.test(x)) consider(x);
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& p, const auto& q) { return p.first < q.first; });
        for (auto& kv : keyed) c.push_back(kv.second);
    };
    uint64_t tries = 0;
    size_t i = start;
    if (i < seq.size()) fill(i);
    while (i < seq.size()) {
        if (ptr[i] < cands[i].size()) {
            int x = cands[i][ptr[i]++];
            if (!free.test(x)) continue;
            if (++tries > budget) {
                exhausted = true;
                return false;
            }
            img[seq[i]] = x;
            free.reset(x);
            ++i;
            if (i < seq.size()) fill(i);
            continue;
        }
        if (i == start) return false;
        --i;
        free.set(img[seq[i]]);
        img[seq[i]] = -1;
    }
    // flow-placed leaves
    std::vector<int> f(n, 0);
    std::vector<int> centers;
    int total = 0;
    for (int v = 0; v < t.n(); ++v)
        if (by_flow[v]) {
            int p = img[par[v]];
            if (f[p]++ == 0) centers.push_back(p);
            ++total;
        }
    if (total == 0) return true;
    std::sort(centers.begin(), centers.end());
    VertexSet a(n, centers);
    VertexSet b(free);
    if (b.size() < total) return false;
    int64_t val = 0;
    StarMatching sm = star_matching_flow(g, a, b, f, &val);
    if (val != total) return false;
    std::vector<std::vector<int>> pool(n);
    for (auto& [c, leaves] : sm.stars) pool[c] = leaves;
    for (int v = 0; v < t.n(); ++v)
        if (by_flow[v]) {
            auto& pl = pool[img[par[v]]];
            img[v] = pl.back();
            pl.pop_back();
        }
    return true;
}

}  // namespace detail

// Embed t with t_root -> host_root (or anywhere in the window when
// host_root < 0); other images come from window minus blocked.
inline PlacementResult place_tree(const Graph& g, const Tree& t, int t_root, int host_root,
                                  const Bitset& window, const Bitset& blocked,
                                  const PlacementOptions& opt = {}) {
    PlacementResult out;
    for (int r = 0; r <= opt.restarts; ++r) {
        ++out.attempts;
        Rng rng(derive_seed(opt.seed, r));
        std::vector<int> img;
        bool exhausted = false;
        bool ok = detail::place_tree_attempt(g, t, t_root, host_root, window, blocked,
                                             opt.budget, r ? &rng : nullptr,
                                             opt.leaves_by_flow, img, exhausted);
        out.exhausted = out.exhausted || exhausted;
        if (ok) {
            out.map = std::move(img);
            return out;
        }
    }
    return out;
}

}  // namespace spanex
