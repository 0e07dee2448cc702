#include <gtest/gtest.h>

#include "spanex/generators.hpp"
#include "spanex/tree_array.hpp"

using namespace spanex;

namespace {

VertexSet window_without(int n, const std::vector<std::pair<int, int>>& pairs) {
    std::vector<char> out(n, 0);
    for (auto [x, y] : pairs) out[x] = out[y] = 1;
    std::vector<int> m;
    for (int v = 0; v < n; ++v)
        if (!out[v]) m.push_back(v);
    return VertexSet(n, m);
}

}  // namespace

TEST(TreeArrayBounds, Arithmetic) {
    EXPECT_EQ(2 * extend_path_k(5, 4) + 1, 5);
    auto rep = tree_array_bound_report(8948, 2, 5, 3, 5, 4);
    ASSERT_EQ(rep.size(), 1u);
    EXPECT_NE(rep[0].find("bound=8948"), std::string::npos);
    EXPECT_TRUE(tree_array_bound_report(8949, 2, 5, 3, 5, 4).empty());
}

TEST(TreeArray, EmptyPairs) {
    Graph g = families::complete(10);
    auto r = build_tree_array(g, VertexSet::all(10), {}, 3, 2, 4, 1);
    EXPECT_TRUE(r.array.paths.empty());
    EXPECT_TRUE(verify_tree_array(g, r.array, VertexSet::all(10), {}, 3, 2).ok);
}

TEST(TreeArray, CompleteHostClosedLoop) {
    Graph g = families::complete(200);
    std::vector<std::pair<int, int>> pairs{{0, 1}};
    VertexSet w = window_without(200, pairs);
    auto r = build_tree_array(g, w, pairs, 3, 2, 4, 1);
    ASSERT_EQ(r.array.paths.size(), 1u);
    EXPECT_EQ(r.array.trees.size(), 2u);
    for (const auto& t : r.array.trees) EXPECT_EQ(t.vertices.size(), 15u);
    auto chk = verify_tree_array(g, r.array, w, pairs, 3, 2);
    EXPECT_TRUE(chk.ok) << chk.violation;
    EXPECT_TRUE(r.warnings.empty());
    // 58 <= 10*4*1 + 1*4*2^4 = 104
    Graph small = families::complete(60);
    TreeArrayOptions o;
    o.strict = true;
    EXPECT_THROW(build_tree_array(small, window_without(60, pairs), pairs, 3, 2, 4, 1, o),
                 PreconditionViolated);
    o.strict = false;
    auto relaxed = build_tree_array(small, window_without(60, pairs), pairs, 3, 2, 4, 1, o);
    EXPECT_EQ(relaxed.warnings.size(), 1u);
}

TEST(TreeArray, VerifierRejectsMutations) {
    Graph g = families::complete(120);
    std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}};
    VertexSet w = window_without(120, pairs);
    auto r = build_tree_array(g, w, pairs, 3, 2, 4, 1);
    ASSERT_TRUE(verify_tree_array(g, r.array, w, pairs, 3, 2).ok);

    TreeArray shared = r.array;
    shared.paths[1][1] = shared.paths[0][1];
    EXPECT_EQ(verify_tree_array(g, shared, w, pairs, 3, 2).violation, "paths not disjoint");

    auto shallow = prune_tree_array(r.array, [](int, int depth) { return depth <= 2; });
    EXPECT_FALSE(verify_tree_array(g, shallow, w, pairs, 3, 2).ok);
    EXPECT_TRUE(verify_tree_array(g, shallow, w, pairs, 3, 2, true).ok);

    TreeArray crossing = r.array;
    crossing.trees[0].vertices.back() = crossing.trees[1].vertices.back();
    EXPECT_FALSE(verify_tree_array(g, crossing, w, pairs, 3, 2).ok);
}

TEST(TreeArray, RandomDenseHostsAndCounting) {
    int ok = 0;
    for (uint64_t seed = 1; seed <= 12; ++seed) {
        int n = 150 + static_cast<int>(seed * 17 % 100);
        Graph g = random_gnp(n, 0.5, seed);
        int s = 3 + static_cast<int>(seed % 2), delta = 2;
        std::vector<std::pair<int, int>> pairs{{0, 1}};
        if (s == 3) pairs.emplace_back(2, 3);
        VertexSet w = window_without(n, pairs);
        TreeArrayOptions opt;
        opt.extend.seed = seed;
        try {
            auto r = build_tree_array(g, w, pairs, s, delta, 4, 1, opt);
            auto chk = verify_tree_array(g, r.array, w, pairs, s, delta);
            EXPECT_TRUE(chk.ok) << chk.violation;
            EXPECT_LE(r.array.vertex_count(),
                      static_cast<int>(pairs.size()) * (s + 1) * ary_tree_order(delta, s));
            // truncating every tree keeps a valid pruned array
            auto cut = prune_tree_array(r.array,
                                        [&](int x, int depth) { return depth <= 1 || x % 3; });
            EXPECT_TRUE(verify_tree_array(g, cut, w, pairs, s, delta, true).ok);
            ++ok;
        } catch (const SearchExhausted&) {
        }
    }
    EXPECT_GE(ok, 11);
}

TEST(RecParameters, Formulas) {
    auto a = rec_parameters(65536, 16, 2);
    EXPECT_DOUBLE_EQ(a.h, 4);
    EXPECT_EQ(a.s_min, 3);
    EXPECT_EQ(a.s_max, 7);
    EXPECT_DOUBLE_EQ(a.d1, 256);
    EXPECT_EQ(a.log_base, 2);
    auto b = rec_parameters(65536, 1 << 20, 2);
    EXPECT_EQ(b.m_bound, 0);
    auto c = rec_parameters(1 << 25, 1 << 20, 2);
    EXPECT_EQ(c.s_min, 4);
    EXPECT_EQ(c.s_max, 9);
    ASSERT_EQ(c.chain.size(), 3u);
    // 2^20 < 2^25 = delta^(5h): regime fails
    EXPECT_FALSE(c.chain[0].holds);
    EXPECT_DOUBLE_EQ(c.chain[0].rhs, 33554432.0);
}
