#pragma once

#include <string>
#include <vector>

#include "spanex/graph.hpp"
#include "spanex/tree.hpp"

namespace spanex {

// map[v] = host image of tree vertex v, -1 when unmapped.
struct Embedding {
    std::vector<int> map;
};

struct EmbeddingCheck {
    bool ok = true;
    std::string violation;
};

inline EmbeddingCheck verify_embedding(const Graph& g, const Tree& t, const Embedding& e,
                                       bool spanning = false) {
    EmbeddingCheck out;
    auto fail = [&](std::string why) {
        out.ok = false;
        out.violation = std::move(why);
        return out;
    };
    if (static_cast<int>(e.map.size()) != t.n()) return fail("map size differs from tree order");
    std::vector<int> owner(g.n(), -1);
    for (int v = 0; v < t.n(); ++v) {
        int x = e.map[v];
        if (x < 0 || x >= g.n()) return fail("tree vertex " + std::to_string(v) + " unmapped");
        if (owner[x] >= 0)
            return fail("host vertex " + std::to_string(x) + " used by " +
                        std::to_string(owner[x]) + " and " + std::to_string(v));
        owner[x] = v;
    }
    for (auto [u, v] : t.edges())
        if (!g.has_edge(e.map[u], e.map[v]))
            return fail("tree edge " + std::to_string(u) + "-" + std::to_string(v) +
                        " maps to non-edge " + std::to_string(e.map[u]) + "-" +
                        std::to_string(e.map[v]));
    if (spanning && t.n() != g.n()) return fail("not surjective: tree order differs from host");
    return out;
}

}  // namespace spanex
