#include <gtest/gtest.h>

#include "spanex/extendable.hpp"
#include "spanex/generators.hpp"

using namespace spanex;
namespace tf = spanex::tree_families;

namespace {

// Direct evaluation of the extendability inequality over all small X.
bool extendable_oracle(const Graph& g, const std::vector<int>& s_deg, const std::vector<char>& in_s,
                       int d, int m) {
    int n = g.n();
    for (uint32_t x = 1; x < (1u << n); ++x) {
        int sz = __builtin_popcount(x);
        if (sz > 2 * m) continue;
        std::vector<char> gamma(n, 0);
        int rhs = (d - 1) * sz;
        for (int v = 0; v < n; ++v)
            if (x >> v & 1) {
                for (int u : g.adj(v)) gamma[u] = 1;
                if (in_s[v]) rhs -= s_deg[v] - 1;
            }
        int lhs = 0;
        for (int u = 0; u < n; ++u) lhs += gamma[u] && !in_s[u];
        if (lhs < rhs) return false;
    }
    return true;
}

void expect_path(const Graph& g, const std::vector<int>& p, int a, int b, int len) {
    ASSERT_EQ(static_cast<int>(p.size()), len + 1);
    EXPECT_EQ(p.front(), a);
    EXPECT_EQ(p.back(), b);
    for (size_t i = 0; i + 1 < p.size(); ++i) EXPECT_TRUE(g.has_edge(p[i], p[i + 1]));
    std::vector<int> s = p;
    std::sort(s.begin(), s.end());
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
}

}  // namespace

TEST(IsExtendable, Examples) {
    Graph k20 = families::complete(20);
    ExtendableState empty(k20, 3, 2);
    EXPECT_TRUE(is_extendable(empty, VerifyMode::Exact).ok);

    Graph c6 = families::cycle(6);
    ExtendableState whole(c6, 3, 1);
    for (int v = 0; v + 1 < 6; ++v) whole.add_edge(v, v + 1);
    auto w = is_extendable(whole, VerifyMode::Exact);
    EXPECT_FALSE(w.ok);

    Graph c12 = families::cycle(12);
    ExtendableState one(c12, 3, 1);
    one.add_edge(0, 1);
    auto r = is_extendable(one, VerifyMode::Exact);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.witness, std::vector<int>{0});
}

TEST(IsExtendable, AgreesWithOracle) {
    Rng rng(3);
    for (uint64_t seed = 1; seed <= 80; ++seed) {
        Graph g = random_gnp(12, 0.5, seed);
        int d = 3 + static_cast<int>(seed % 2), m = 1 + static_cast<int>(seed % 2);
        ExtendableState s(g, d, m);
        std::vector<int> deg(12, 0);
        std::vector<char> in(12, 0);
        for (auto [u, v] : g.edges()) {
            if (uniform_below(rng, 5) != 0 || deg[u] >= d || deg[v] >= d) continue;
            s.add_edge(u, v);
            ++deg[u], ++deg[v];
            in[u] = in[v] = 1;
        }
        EXPECT_EQ(is_extendable(s, VerifyMode::Exact).ok, extendable_oracle(g, deg, in, d, m))
            << seed;
    }
}

TEST(IsExtendable, SampledNeverContradictsExact) {
    for (uint64_t seed = 1; seed <= 40; ++seed) {
        Graph g = random_gnp(30, 0.3, seed);
        ExtendableState s(g, 3, 2);
        for (auto [u, v] : g.edges())
            if (u < 6 && v < 6 && s.degree(u) < 2 && s.degree(v) < 2) s.add_edge(u, v);
        auto ex = is_extendable(s, VerifyMode::Exact);
        auto sm = is_extendable(s, VerifyMode::Sampled, 500, seed);
        if (ex.ok) EXPECT_TRUE(sm.ok);
        if (!sm.ok) EXPECT_FALSE(ex.ok);
    }
}

TEST(ExtendPath, ParameterCheck) {
    EXPECT_EQ(extend_path_k(4, 3), 2);
    Graph k = families::complete(200);
    ExtendableState s(k, 4, 3);
    s.add_vertex(0);
    s.add_vertex(1);
    EXPECT_THROW(extend_path(s, 0, 1, 4), PreconditionViolated);
}

TEST(ExtendPath, CompleteHost) {
    Graph k50 = families::complete(50);
    ExtendableState s(k50, 3, 2);
    s.add_vertex(0);
    s.add_vertex(1);
    ExtendOptions opt;
    opt.check_bounds = false;  // 50 < 10dm, the bound is void at this size
    auto p = extend_path(s, 0, 1, 5, opt);
    expect_path(k50, p, 0, 1, 5);
    EXPECT_TRUE(is_extendable(s, VerifyMode::Exact).ok);
    EXPECT_EQ(s.size(), 6);
}

TEST(ExtendPath, BridgedCliquesAlwaysReverify) {
    std::vector<std::pair<int, int>> e;
    for (int c = 0; c < 2; ++c)
        for (int u = 0; u < 25; ++u)
            for (int v = u + 1; v < 25; ++v) e.emplace_back(25 * c + u, 25 * c + v);
    e.emplace_back(24, 25);
    Graph g(50, e);
    int found = 0;
    for (int len : {5, 6, 9}) {
        ExtendableState s(g, 3, 1);
        s.add_vertex(0);
        s.add_vertex(49);
        ExtendOptions opt;
        opt.check_bounds = false;
        try {
            auto p = extend_path(s, 0, 49, len, opt);
            expect_path(g, p, 0, 49, len);
            EXPECT_TRUE(is_extendable(s, VerifyMode::Exact).ok);
            ++found;
        } catch (const SearchExhausted&) {
        }
    }
    EXPECT_GT(found, 0);
}

TEST(ExtendTree, Examples) {
    Graph k40 = families::complete(40);
    ExtendableState s(k40, 4, 2);
    s.add_vertex(7);
    EXPECT_EQ(extend_tree(s, 7, Tree(1, {}), 0), std::vector<int>{7});
    EXPECT_EQ(s.size(), 1);
    Tree t = tf::star(3);
    auto map = extend_tree(s, 7, t, 0);
    EXPECT_EQ(map[0], 7);
    EXPECT_TRUE(verify_embedding(k40, t, Embedding{map}).ok);
    EXPECT_EQ(s.size(), 4);
    EXPECT_TRUE(is_extendable(s, VerifyMode::Exact).ok);

    Graph k30 = families::complete(30);
    ExtendableState big(k30, 3, 2);
    for (int v = 0; v < 20; ++v) big.add_vertex(v);
    EXPECT_THROW(extend_tree(big, 0, tf::path(5), 0), PreconditionViolated);
}

TEST(EmbedAlmostSpanning, Capacity) {
    EXPECT_EQ(almost_spanning_capacity(100, 10, 3), 40);
    Graph k30 = families::complete(30);
    auto e = embed_almost_spanning(k30, VertexSet::all(30), tf::path(10), 10);
    EXPECT_TRUE(verify_embedding(k30, tf::path(10), e).ok);
    EXPECT_THROW(embed_almost_spanning(k30, VertexSet::all(30), tf::path(25), 2),
                 CapacityExceeded);
}

TEST(EmbedAlmostSpanning, RandomHosts) {
    int ok = 0, trials = 60;
    for (int i = 0; i < trials; ++i) {
        Graph g = random_gnp(300, 0.2, 1000 + i);
        Tree t = random_bounded_tree(60 + (i * 37) % 121, 3, 2000 + i);
        try {
            auto e = embed_almost_spanning(g, VertexSet::all(300), t, 15);
            EXPECT_TRUE(verify_embedding(g, t, e).ok);
            ++ok;
        } catch (const EmbeddingFailed&) {
        }
    }
    EXPECT_GE(ok, trials * 99 / 100);
}

TEST(ConnectExactLength, CompleteHost) {
    EXPECT_NEAR(connect_min_length(8, 4), 4.0, 1e-12);
    Graph k60 = families::complete(60);
    std::vector<int> um(40);
    std::iota(um.begin(), um.end(), 0);
    VertexSet u(60, um);
    std::vector<std::pair<int, int>> pairs{{40, 41}, {42, 43}, {44, 45}, {46, 47}};
    auto r = connect_exact_length(k60, pairs, u, {6, 6, 6, 6}, 2, 2);
    ASSERT_GE(r.index, 0);
    expect_path(k60, r.path, pairs[r.index].first, pairs[r.index].second, 6);
    for (size_t i = 1; i + 1 < r.path.size(); ++i) EXPECT_TRUE(u.contains(r.path[i]));
    EXPECT_EQ(r.route, "trees");
    EXPECT_THROW(connect_exact_length(k60, pairs, u, {21, 6, 6, 6}, 2, 2), PreconditionViolated);
}

TEST(ConnectExactLength, RandomHostsProduceValidPaths) {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Graph g = random_gnp(150, 0.3, seed);
        std::vector<int> um;
        for (int v = 10; v < 150; ++v) um.push_back(v);
        VertexSet u(150, um);
        std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {4, 5}, {6, 7}};
        int k = 4 + static_cast<int>(seed % 8);
        ConnectOptions opt;
        opt.seed = seed;
        auto r = connect_exact_length(g, pairs, u, std::vector<int>(4, k), 3, 2, opt);
        expect_path(g, r.path, pairs[r.index].first, pairs[r.index].second, k);
        for (size_t i = 1; i + 1 < r.path.size(); ++i) EXPECT_TRUE(u.contains(r.path[i]));
    }
}
