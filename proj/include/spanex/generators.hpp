#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/graph.hpp"

namespace spanex {

// Pairing model with rejection of loops and multi-edges. Degrees above
// (n-1)/2 go through the complement.
inline Graph random_regular(int n, int d, uint64_t seed, int max_rejections = 200000) {
    if (n < 1 || d < 0 || d >= n) throw InvalidSpec("need 0 <= d < n");
    if ((static_cast<int64_t>(n) * d) % 2) throw InvalidSpec("n*d must be even");
    bool complement = 2 * d > n - 1;
    int dd = complement ? n - 1 - d : d;
    Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int attempt = 0; attempt < max_rejections; ++attempt) {
        std::vector<int> points;
        points.reserve(static_cast<size_t>(n) * dd);
        for (int v = 0; v < n; ++v)
            for (int j = 0; j < dd; ++j) points.push_back(v);
        shuffle_in_place(points, rng);
        edges.clear();
        std::vector<std::vector<char>> seen;
        bool ok = true;
        std::vector<std::vector<int>> adj(n);
        for (size_t i = 0; i + 1 < points.size(); i += 2) {
            int u = points[i], v = points[i + 1];
            if (u == v) {
                ok = false;
                break;
            }
            for (int w : adj[u])
                if (w == v) ok = false;
            if (!ok) break;
            adj[u].push_back(v);
            adj[v].push_back(u);
            edges.emplace_back(std::min(u, v), std::max(u, v));
        }
        if (!ok) continue;
        if (!complement) return Graph(n, edges);
        std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
        for (auto [u, v] : edges) has[u][v] = has[v][u] = 1;
        std::vector<std::pair<int, int>> comp;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (!has[u][v]) comp.emplace_back(u, v);
        return Graph(n, comp);
    }
    throw RejectionBudgetExceeded("no simple pairing after " + std::to_string(max_rejections) +
                                  " attempts");
}

inline Graph random_gnp(int n, double p, uint64_t seed) {
    if (n < 0 || !(p >= 0 && p <= 1)) throw InvalidSpec("need n >= 0 and p in [0,1]");
    Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (uniform_unit(rng) < p) edges.emplace_back(u, v);
    return Graph(n, edges);
}

}  // namespace spanex
