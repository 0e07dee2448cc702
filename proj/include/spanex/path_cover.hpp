#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/extendable.hpp"
#include "spanex/graph.hpp"
#include "spanex/matching.hpp"
#include "spanex/search.hpp"
#include "spanex/tree_array.hpp"

namespace spanex {

// k triangles sharing only the root; absorbers[i] is the edge of triangle i
// not incident with the root.
struct Fan {
    int root = -1;
    std::vector<std::pair<int, int>> absorbers;
    int size() const { return static_cast<int>(absorbers.size()); }
};

// Greedy k-edge matching inside N(v) ∩ s.
inline Fan build_fan(const Graph& g, int v, int k, const Bitset& s) {
    if (k < 1) throw InvalidParameter("fan size must be >= 1");
    Fan f;
    f.root = v;
    Bitset open(g.n());
    std::vector<int> nb;
    for (int u : g.adj(v))
        if (s.test(u)) {
            open.set(u);
            nb.push_back(u);
        }
    std::vector<int> deg(g.n(), 0);
    for (int u : nb) deg[u] = g.degree_into(u, open);
    std::stable_sort(nb.begin(), nb.end(), [&](int a, int b) { return deg[a] < deg[b]; });
    for (int a : nb) {
        if (f.size() == k) break;
        if (!open.test(a)) continue;
        int best = -1;
        for (int b : g.adj(a))
            if (open.test(b) && (best < 0 || deg[b] < deg[best])) best = b;
        if (best < 0) continue;
        open.reset(a);
        open.reset(best);
        f.absorbers.emplace_back(a, best);
    }
    if (f.size() < k)
        throw InsufficientNeighborhood("no " + std::to_string(k) + "-fan at " + std::to_string(v) +
                                       " (found " + std::to_string(f.size()) + ")");
    return f;
}

inline Fan build_fan(const Graph& g, int v, int k, const VertexSet& s) {
    return build_fan(g, v, k, s.bits());
}

// Bipartite template on X = [0,3t) and Y ∪ Z = [3t,5t) ∪ [5t,7t).
struct TemplateGraph {
    int t = 0;
    Graph h;
    int audits = 0;
    bool exhaustive = false;
    double failure_bound = 0;  // 95% bound on the per-sample failure rate (3/audits)

    int x(int i) const { return i; }
    int y(int j) const { return 3 * t + j; }
    int z(int j) const { return 5 * t + j; }
    int max_degree() const {
        int d = 0;
        for (int v = 0; v < h.n(); ++v) d = std::max(d, h.degree(v));
        return d;
    }
    int max_x_degree() const {
        int d = 0;
        for (int i = 0; i < 3 * t; ++i) d = std::max(d, h.degree(i));
        return d;
    }
};

// Perfect matching X <-> Y ∪ Z' (zprime holds Z indices); partner[i] is the
// template vertex matched to x_i, empty when none exists.
inline std::vector<int> template_matching(const TemplateGraph& tg, const std::vector<int>& zprime) {
    int t = tg.t;
    std::vector<int> xs, right;
    for (int i = 0; i < 3 * t; ++i) xs.push_back(tg.x(i));
    for (int j = 0; j < 2 * t; ++j) right.push_back(tg.y(j));
    for (int j : zprime) right.push_back(tg.z(j));
    if (right.size() != xs.size()) return {};
    std::vector<int> f(tg.h.n(), 0);
    for (int x : xs) f[x] = 1;
    auto res = f_matching(tg.h, StarDemand{VertexSet(tg.h.n(), xs), VertexSet(tg.h.n(), right), f});
    if (!res) return {};
    std::vector<int> partner(3 * t, -1);
    for (const auto& [c, leaves] : res.value().stars)
        if (!leaves.empty()) partner[c] = leaves[0];
    return partner;
}

inline int default_template_degree(int t) { return t <= 3 ? 3 : t <= 4 ? 4 : t <= 12 ? 6 : 8; }

// Union of x_degree balanced random assignments X -> Y ∪ Z, kept only if
// every audited Z' of size t admits a perfect matching. x_degree 0 picks
// default_template_degree(t).
inline TemplateGraph flexible_template(int t, uint64_t seed, int audit_samples, int x_degree = 0,
                                       int max_retries = 200) {
    if (t < 1) throw InvalidParameter("template needs t >= 1");
    if (audit_samples < 1) throw InvalidParameter("audit_samples must be >= 1");
    int nr = 4 * t;
    if (x_degree <= 0) x_degree = default_template_degree(t);
    int D = std::clamp(x_degree, 1, std::min(40, nr));
    uint64_t all = binomial(2 * t, t);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        Rng rng(derive_seed(seed, attempt));
        std::vector<int> rd(nr, 0);
        std::vector<std::vector<char>> adj(3 * t, std::vector<char>(nr, 0));
        std::vector<std::pair<int, int>> edges;
        for (int round = 0; round < D; ++round) {
            std::vector<int> xs(3 * t);
            std::iota(xs.begin(), xs.end(), 0);
            shuffle_in_place(xs, rng);
            for (int x : xs) {
                std::vector<int> rs(nr);
                std::iota(rs.begin(), rs.end(), 0);
                shuffle_in_place(rs, rng);
                std::stable_sort(rs.begin(), rs.end(), [&](int a, int b) { return rd[a] < rd[b]; });
                for (int q : rs)
                    if (!adj[x][q] && rd[q] < 40) {
                        adj[x][q] = 1;
                        ++rd[q];
                        edges.emplace_back(x, 3 * t + q);
                        break;
                    }
            }
        }
        TemplateGraph tg;
        tg.t = t;
        tg.h = Graph(7 * t, edges);
        bool ok = true;
        if (all <= static_cast<uint64_t>(audit_samples)) {
            tg.exhaustive = true;
            std::vector<int> idx(t);
            std::iota(idx.begin(), idx.end(), 0);
            do {
                ++tg.audits;
                if (template_matching(tg, idx).empty()) ok = false;
            } while (ok && next_combination(idx, 2 * t));
        } else {
            for (int a = 0; a < audit_samples && ok; ++a) {
                std::vector<int> zs(2 * t);
                std::iota(zs.begin(), zs.end(), 0);
                shuffle_in_place(zs, rng);
                zs.resize(t);
                ++tg.audits;
                if (template_matching(tg, zs).empty()) ok = false;
            }
            tg.failure_bound = 3.0 / tg.audits;
        }
        if (ok) return tg;
    }
    throw ConstructionFailed("no flexible template for t=" + std::to_string(t) + " after " +
                             std::to_string(max_retries) + " tries");
}

inline bool template_flexible_exhaustive(const TemplateGraph& tg) {
    std::vector<int> idx(tg.t);
    std::iota(idx.begin(), idx.end(), 0);
    do {
        if (template_matching(tg, idx).empty()) return false;
    } while (next_combination(idx, 2 * tg.t));
    return true;
}

// Drops edges in random order while every Z' still has a perfect matching;
// only for t small enough to check all C(2t,t) subsets.
inline TemplateGraph thin_template(const TemplateGraph& tg, uint64_t seed, uint64_t max_subsets = 200) {
    if (binomial(2 * tg.t, tg.t) > max_subsets) return tg;
    Rng rng(seed);
    auto edges = tg.h.edges();
    shuffle_in_place(edges, rng);
    TemplateGraph cur = tg;
    for (size_t i = 0; i < edges.size();) {
        std::vector<std::pair<int, int>> trial;
        for (auto e : cur.h.edges())
            if (e != edges[i]) trial.push_back(e);
        TemplateGraph next = cur;
        next.h = Graph(cur.h.n(), trial);
        if (template_flexible_exhaustive(next)) {
            cur = std::move(next);
            edges.erase(edges.begin() + i);
        } else {
            ++i;
        }
    }
    cur.exhaustive = true;
    cur.audits = static_cast<int>(binomial(2 * tg.t, tg.t));
    cur.failure_bound = 0;
    return cur;
}

enum class AbsorberRoute { Auto, Fans, Shared };
enum class CompletionRoute { Auto, StarMatching, Direct };

struct PathCoverOptions {
    bool strict = false;       // r = n/(10^4 l) and s must come out integral
    double r_divisor = 10;     // desk stand-in for 10^4
    int r_override = 0;
    double c = 0.125;
    int segment_min = 2;       // shortest connecting segment; the construction uses 3
    int template_degree = 0;   // 0: default_template_degree(r)
    bool thin_template = true; // fewer roots per skeleton when all Z' can be checked
    int audit_samples = 200;
    int m = 1, d1 = 2;         // handed to connect_exact_length
    AbsorberRoute absorber = AbsorberRoute::Auto;
    CompletionRoute completion = CompletionRoute::Auto;
    int attempts = 8;
    uint64_t budget = 200000;  // search steps per path query
    uint64_t seed = 1;
};

struct PathCoverPlan {
    std::vector<std::pair<int, int>> pairs;
    int ell = 0;
    VertexSet w;
    std::array<std::vector<int>, 4> parts;  // W1..W4
    int r = 0, s = 0;
    double c = 0.125;

    static int absorber_size(int r, int ell) { return 3 * r * (ell - 2) - r; }
    static int skeleton_segment_total(int ell, int mi) { return ell - 2 - mi; }
    int leftover() const { return s * (ell - 2) - r; }
};

inline void check_cover_identity(const VertexSet& w, size_t pairs, int ell) {
    int64_t p = static_cast<int64_t>(pairs);
    if (static_cast<int64_t>(ell) * p != w.size() + 2 * p)
        throw ArithmeticMismatch("l*|pairs| = " + std::to_string(ell * p) + " but |W|+2|pairs| = " +
                                 std::to_string(w.size() + 2 * p));
}

inline PathCoverPlan make_path_cover_plan(const VertexSet& w,
                                          const std::vector<std::pair<int, int>>& pairs, int ell,
                                          const PathCoverOptions& opt, uint64_t seed) {
    if (ell < 4) throw InvalidParameter("l must be >= 4");
    check_cover_identity(w, pairs.size(), ell);
    PathCoverPlan p;
    p.pairs = pairs;
    p.ell = ell;
    p.w = w;
    p.c = opt.c;
    int P = static_cast<int>(pairs.size());
    if (opt.strict) {
        double n = static_cast<double>(ell) * P;
        double r = n / (1e4 * ell);
        double s = (1 + opt.c) * r / (ell - 2);
        if (r < 1 || r != std::floor(r))
            throw PreconditionViolated("r = n/(10^4 l) = " + std::to_string(r) + " is not a positive integer");
        if (s != std::floor(s))
            throw PreconditionViolated("s = (1+c)r/(l-2) = " + std::to_string(s) + " is not an integer");
        p.r = static_cast<int>(r);
        p.s = static_cast<int>(s);
    } else {
        p.r = opt.r_override > 0 ? opt.r_override
                                 : std::max(1, static_cast<int>(std::floor(P / opt.r_divisor + 1e-9)));
        p.s = std::max(1, static_cast<int>(std::ceil((1 + opt.c) * p.r / (ell - 2) - 1e-9)));
    }
    if (3 * p.r + p.s > P)
        throw PreconditionViolated("need 3r+s <= |pairs|: r=" + std::to_string(p.r) +
                                   ", s=" + std::to_string(p.s) + ", |pairs|=" + std::to_string(P));
    if (w.size() < 4 * p.r) throw PreconditionViolated("|W| < 4r");
    Rng rng(seed);
    std::vector<int> mem = w.members();
    shuffle_in_place(mem, rng);
    int rest = w.size() - 4 * p.r;
    int cut[4] = {2 * p.r, 2 * p.r, rest - rest / 2, rest / 2};
    size_t at = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < cut[i]; ++j) p.parts[i].push_back(mem[at++]);
    return p;
}

struct PathCoverCheck {
    bool ok = true;
    std::string violation;
};

inline PathCoverCheck verify_path_cover(const Graph& g, const VertexSet& w,
                                        const std::vector<std::pair<int, int>>& pairs, int ell,
                                        const std::vector<std::vector<int>>& paths) {
    PathCoverCheck out;
    auto fail = [&](const std::string& why) {
        out.ok = false;
        out.violation = why;
        return out;
    };
    if (paths.size() != pairs.size()) return fail("one path per pair required");
    std::vector<char> seen(g.n(), 0);
    int covered = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = paths[i];
        if (static_cast<int>(p.size()) != ell) return fail("path " + std::to_string(i) + " has wrong length");
        if (p.front() != pairs[i].first || p.back() != pairs[i].second)
            return fail("path " + std::to_string(i) + " has wrong endpoints");
        for (size_t j = 0; j < p.size(); ++j) {
            int v = p[j];
            if (v < 0 || v >= g.n()) return fail("vertex out of range");
            if (seen[v]) return fail("paths not disjoint at " + std::to_string(v));
            seen[v] = 1;
            if (j + 1 < p.size() && !g.has_edge(v, p[j + 1])) return fail("path edge missing");
            if (j > 0 && j + 1 < p.size()) {
                if (!w.contains(v)) return fail("internal vertex outside W");
                ++covered;
            }
        }
    }
    if (covered != w.size()) return fail("W not covered exactly");
    return out;
}

namespace detail {

// (a,b)-path with len edges, internals from pool, containing every vertex of
// required and, for every root, an edge inside the root's neighbourhood.
inline std::vector<int> find_constrained_path(const Graph& g, int a, int b, int len,
                                              const Bitset& pool, const std::vector<int>& roots,
                                              const Bitset* required, uint64_t budget, Rng& rng) {
    int n = g.n();
    if (len < 1) return {};
    Bitset avail = pool;
    avail.reset(a);
    avail.reset(b);
    int req_left = required ? required->count() : 0;
    if (req_left > len - 1) return {};
    std::vector<int> dist(n, -1), q;
    for (int v : g.adj(b))
        if (avail.test(v)) {
            dist[v] = 1;
            q.push_back(v);
        }
    for (size_t i = 0; i < q.size(); ++i)
        for (int u : g.adj(q[i]))
            if (avail.test(u) && dist[u] < 0) {
                dist[u] = dist[q[i]] + 1;
                q.push_back(u);
            }
    std::vector<int> cov(roots.size(), 0);
    int uncovered = static_cast<int>(roots.size());
    auto gain = [&](int u, int w) {
        int c = 0;
        for (size_t k = 0; k < roots.size(); ++k)
            c += !cov[k] && g.has_edge(u, roots[k]) && g.has_edge(w, roots[k]);
        return c;
    };
    auto mark = [&](int u, int w, int delta) {
        for (size_t k = 0; k < roots.size(); ++k)
            if (g.has_edge(u, roots[k]) && g.has_edge(w, roots[k])) {
                if (delta > 0 && cov[k]++ == 0) --uncovered;
                if (delta < 0 && --cov[k] == 0) ++uncovered;
            }
    };
    std::vector<int> path{a};
    uint64_t steps = 0;
    std::function<bool(int)> rec = [&](int left) -> bool {
        int cur = path.back();
        if (left == 1) {
            if (req_left > 0 || !g.has_edge(cur, b)) return false;
            mark(cur, b, 1);
            if (uncovered == 0) {
                path.push_back(b);
                return true;
            }
            mark(cur, b, -1);
            return false;
        }
        if (req_left > left - 1) return false;
        std::vector<std::pair<double, int>> cand;
        for (int v : g.adj(cur))
            if (avail.test(v) && dist[v] >= 0 && dist[v] <= left - 1) {
                double key = uniform_unit(rng);
                if (required && required->test(v)) key += 100;
                key += 10.0 * gain(cur, v);
                cand.emplace_back(-key, v);
            }
        std::sort(cand.begin(), cand.end());
        for (auto [key, v] : cand) {
            if (++steps > budget) return false;
            bool req = required && required->test(v);
            avail.reset(v);
            path.push_back(v);
            mark(cur, v, 1);
            req_left -= req;
            if (rec(left - 1)) return true;
            req_left += req;
            mark(cur, v, -1);
            path.pop_back();
            avail.set(v);
        }
        return false;
    };
    if (rec(len)) return path;
    return {};
}

// Nearly equal split of total into parts.size() lengths respecting mins;
// empty when the mins do not fit.
inline std::vector<int> split_lengths(int total, const std::vector<int>& mins) {
    int sum = 0;
    for (int x : mins) sum += x;
    if (sum > total || mins.empty()) return {};
    std::vector<int> out = mins;
    for (int rem = total - sum; rem > 0; --rem)
        ++*std::min_element(out.begin(), out.end());
    return out;
}

inline std::vector<int> path_internal_set(const std::vector<int>& p) {
    return std::vector<int>(p.begin() + 1, p.end() - 1);
}

}  // namespace detail

struct AbsorbingStructure {
    int r = 0, ell = 0;
    TemplateGraph tmpl;
    std::vector<int> w1, w2;
    std::vector<int> tau;  // template vertex 3t+q -> host vertex tau[q]; Y first, then Z
    std::vector<std::vector<int>> skeletons;                   // 3r paths with l-1 vertices
    std::vector<std::vector<std::pair<int, int>>> slots;        // per skeleton: (root, edge index)
    std::vector<Fan> fans;
    std::string route;  // "fans" or "shared"
    VertexSet absorber_set;

    std::vector<int> roots_of(int i) const {
        std::vector<int> out;
        for (int q : tmpl.h.adj(i)) out.push_back(tau[q - 3 * tmpl.t]);
        return out;
    }
};

inline bool fan_route_fits(int ell, int x_degree, int segment_min) {
    return ell - 2 >= x_degree + (x_degree + 1) * segment_min;
}

// Skeleton paths of length l-2 for the first 3r pairs, each carrying an
// absorbing edge for every root the template assigns to it.
inline AbsorbingStructure build_absorbing_structure(const Graph& g, const PathCoverPlan& plan,
                                                    const PathCoverOptions& opt, uint64_t seed) {
    AbsorbingStructure st;
    int r = plan.r, ell = plan.ell, n = g.n();
    st.r = r;
    st.ell = ell;
    st.w1 = plan.parts[0];
    st.w2 = plan.parts[1];
    Rng rng(seed);
    try {
        st.tmpl = flexible_template(r, derive_seed(seed, 1), opt.audit_samples, opt.template_degree);
        if (opt.thin_template) st.tmpl = thin_template(st.tmpl, derive_seed(seed, 2));
    } catch (const ConstructionFailed& e) {
        throw StageFailure("TemplateStage", e.what());
    }
    std::vector<int> y = st.w2, z = st.w1;
    shuffle_in_place(y, rng);
    shuffle_in_place(z, rng);
    st.tau = y;
    st.tau.insert(st.tau.end(), z.begin(), z.end());
    std::vector<int> tau_inv(n, -1);
    for (size_t q = 0; q < st.tau.size(); ++q) tau_inv[st.tau[q]] = static_cast<int>(q);

    bool fans = opt.absorber == AbsorberRoute::Fans ||
                (opt.absorber == AbsorberRoute::Auto &&
                 fan_route_fits(ell, st.tmpl.max_x_degree(), opt.segment_min));
    st.route = fans ? "fans" : "shared";
    Bitset pool(n);
    for (int v : plan.parts[2]) pool.set(v);
    for (int v : plan.parts[3]) pool.set(v);
    int nx = 3 * r;
    st.skeletons.resize(nx);
    st.slots.resize(nx);

    if (fans) {
        std::vector<int> w3 = plan.parts[2];
        shuffle_in_place(w3, rng);
        Bitset tres(n), tmain(n);
        for (size_t i = 0; i < w3.size(); ++i) (i < w3.size() / 2 ? tres : tmain).set(w3[i]);
        std::vector<int> roots = st.w1;
        roots.insert(roots.end(), st.w2.begin(), st.w2.end());
        shuffle_in_place(roots, rng);
        std::vector<std::vector<std::pair<int, int>>> inventory(n);
        for (int v : roots) {
            int k = st.tmpl.h.degree(3 * r + tau_inv[v]);
            Fan f;
            try {
                f = build_fan(g, v, k, tmain);
            } catch (const InsufficientNeighborhood&) {
                try {
                    f = build_fan(g, v, k, tres);
                } catch (const InsufficientNeighborhood& e) {
                    throw StageFailure("FanStage", e.what());
                }
            }
            for (auto [a, b] : f.absorbers) {
                tmain.reset(a), tmain.reset(b), tres.reset(a), tres.reset(b);
                pool.reset(a), pool.reset(b);
            }
            inventory[v] = f.absorbers;
            st.fans.push_back(std::move(f));
        }
        // M_i takes the next unused absorber of every root assigned to i
        std::vector<size_t> next(n, 0);
        for (int i = 0; i < nx; ++i) {
            std::vector<std::pair<int, std::pair<int, int>>> mi;
            for (int v : st.roots_of(i)) mi.emplace_back(v, inventory[v][next[v]++]);
            shuffle_in_place(mi, rng);
            int k = static_cast<int>(mi.size());
            auto lens = detail::split_lengths(PathCoverPlan::skeleton_segment_total(ell, k),
                                              std::vector<int>(k + 1, opt.segment_min));
            if (lens.empty()) throw StageFailure("ThreadStage", "segments do not fit in l-2");
            auto [x, yv] = plan.pairs[i];
            std::vector<int> path{x};
            for (int j = 0; j <= k; ++j) {
                int cur = path.back();
                std::vector<std::pair<int, int>> options;
                if (j < k) {
                    auto [a, b] = mi[j].second;
                    options = {{a, b}, {b, a}};
                } else {
                    options = {{yv, -1}};
                }
                bool done = false;
                for (auto [u, w] : options) {
                    auto ps = find_exact_path(g, cur, u, lens[j], pool, opt.budget, &rng);
                    if (ps.path.empty()) continue;
                    for (size_t t = 1; t < ps.path.size(); ++t) {
                        path.push_back(ps.path[t]);
                        if (t + 1 < ps.path.size()) pool.reset(ps.path[t]);
                    }
                    if (w >= 0) {
                        st.slots[i].emplace_back(mi[j].first, static_cast<int>(path.size()) - 1);
                        path.push_back(w);
                    }
                    done = true;
                    break;
                }
                if (!done)
                    throw StageFailure("ThreadStage", "segment " + std::to_string(j) + " of skeleton " +
                                                          std::to_string(i) + " not found");
            }
            st.skeletons[i] = std::move(path);
        }
    } else {
        for (int i = 0; i < nx; ++i) {
            auto roots = st.roots_of(i);
            auto [x, yv] = plan.pairs[i];
            auto p = detail::find_constrained_path(g, x, yv, ell - 2, pool, roots, nullptr,
                                                   opt.budget, rng);
            if (p.empty())
                throw StageFailure("ThreadStage", "no skeleton for pair " + std::to_string(i));
            for (int v : detail::path_internal_set(p)) pool.reset(v);
            for (int v : roots)
                for (size_t j = 0; j + 1 < p.size(); ++j)
                    if (g.has_edge(v, p[j]) && g.has_edge(v, p[j + 1])) {
                        st.slots[i].emplace_back(v, static_cast<int>(j));
                        break;
                    }
            st.skeletons[i] = std::move(p);
        }
        // the triangles actually used form one fan per root
        std::vector<int> idx(n, -1);
        for (int i = 0; i < nx; ++i)
            for (auto [v, j] : st.slots[i]) {
                if (idx[v] < 0) {
                    idx[v] = static_cast<int>(st.fans.size());
                    st.fans.push_back(Fan{v, {}});
                }
                st.fans[idx[v]].absorbers.emplace_back(st.skeletons[i][j], st.skeletons[i][j + 1]);
            }
    }
    std::vector<int> a = st.w2;
    for (const auto& p : st.skeletons)
        for (int v : detail::path_internal_set(p)) a.push_back(v);
    st.absorber_set = VertexSet(n, a);
    if (st.absorber_set.size() != PathCoverPlan::absorber_size(r, ell))
        throw ArithmeticMismatch("|A| = " + std::to_string(st.absorber_set.size()) + ", expected " +
                                 std::to_string(PathCoverPlan::absorber_size(r, ell)));
    return st;
}

// Paths of length l-1 for the first 3r pairs covering A ∪ U, for U ⊆ W1 with |U| = r.
inline std::vector<std::vector<int>> activate_absorbers(const AbsorbingStructure& st,
                                                        const std::vector<int>& u) {
    int t = st.r;
    if (static_cast<int>(u.size()) != t) throw InvalidParameter("|U| must equal r");
    std::vector<int> zprime;
    for (int v : u) {
        auto it = std::find(st.tau.begin() + 2 * t, st.tau.end(), v);
        if (it == st.tau.end()) throw InvalidParameter("U must lie in W1");
        zprime.push_back(static_cast<int>(it - st.tau.begin()) - 2 * t);
    }
    auto partner = template_matching(st.tmpl, zprime);
    if (partner.empty()) throw StageFailure("Absorb", "template has no matching for this U");
    std::vector<std::vector<int>> out;
    for (int i = 0; i < 3 * t; ++i) {
        int v = st.tau[partner[i] - 3 * t];
        int pos = -1;
        for (auto [root, j] : st.slots[i])
            if (root == v) pos = j;
        if (pos < 0) throw StageFailure("Absorb", "no absorber for matched root");
        std::vector<int> p = st.skeletons[i];
        p.insert(p.begin() + pos + 1, v);
        out.push_back(std::move(p));
    }
    return out;
}

struct AbsorberAudit {
    int samples = 0, passed = 0;
    std::string first_failure;
};

// Activates the structure for random U ⊆ W1 and checks every resulting path
// system covers A ∪ U exactly.
inline AbsorberAudit audit_absorbers(const Graph& g, const AbsorbingStructure& st,
                                     const std::vector<std::pair<int, int>>& pairs, int samples,
                                     uint64_t seed) {
    AbsorberAudit out;
    Rng rng(seed);
    std::vector<std::pair<int, int>> first(pairs.begin(), pairs.begin() + 3 * st.r);
    for (int k = 0; k < samples; ++k) {
        std::vector<int> u = st.w1;
        shuffle_in_place(u, rng);
        u.resize(st.r);
        ++out.samples;
        try {
            auto paths = activate_absorbers(st, u);
            VertexSet cover = st.absorber_set | VertexSet(g.n(), u);
            auto chk = verify_path_cover(g, cover, first, st.ell, paths);
            if (chk.ok) {
                ++out.passed;
                continue;
            }
            if (out.first_failure.empty()) out.first_failure = chk.violation;
        } catch (const Error& e) {
            if (out.first_failure.empty()) out.first_failure = e.what();
        }
    }
    return out;
}

struct PathCoverResult {
    std::vector<std::vector<int>> paths;  // in pair order
    int r = 0, s = 0, leftover = 0;
    std::string absorber_route, completion_route;
    int attempts = 0;
    std::vector<std::string> failures;  // one per failed attempt
};

namespace detail {

inline std::vector<std::vector<int>> path_cover_attempt(const Graph& g, const VertexSet& w,
                                                        const std::vector<std::pair<int, int>>& pairs,
                                                        int ell, const PathCoverOptions& opt,
                                                        uint64_t seed, PathCoverResult& info) {
    int n = g.n();
    PathCoverPlan plan = make_path_cover_plan(w, pairs, ell, opt, derive_seed(seed, 0));
    int r = plan.r, s = plan.s, P = static_cast<int>(pairs.size());
    info.r = r;
    info.s = s;
    info.leftover = plan.leftover();
    Rng rng(derive_seed(seed, 7));

    // Phase 1
    AbsorbingStructure st = build_absorbing_structure(g, plan, opt, derive_seed(seed, 1));
    info.absorber_route = st.route;

    // Phase 2
    Bitset pool = w.bits();
    pool.andnot(st.absorber_set.bits());
    for (int v : plan.parts[0]) pool.reset(v);
    if (pool.count() != (P - 3 * r) * (ell - 2) - r)
        throw ArithmeticMismatch("|W'| differs from (l-2)|X2| - r");
    std::vector<std::vector<int>> paths(P);
    std::vector<int> remaining;
    for (int i = 3 * r; i < P; ++i) remaining.push_back(i);
    int batch = std::max(1, 2 * opt.m);
    while (static_cast<int>(remaining.size()) > s) {
        shuffle_in_place(remaining, rng);
        int found = -1;
        std::vector<int> path;
        if (2 * (ell - 1) <= pool.count()) {
            std::vector<std::pair<int, int>> bp;
            std::vector<int> idx;
            for (int i : remaining) {
                if (static_cast<int>(bp.size()) == batch) break;
                bp.push_back(pairs[i]);
                idx.push_back(i);
            }
            ConnectOptions co;
            co.seed = rng();
            co.budget = opt.budget;
            co.allow_fallback = false;
            try {
                auto cr = connect_exact_length(g, bp, VertexSet(pool), std::vector<int>(bp.size(), ell - 1),
                                               opt.d1, opt.m, co);
                found = idx[cr.index];
                path = std::move(cr.path);
            } catch (const Error&) {
            }
        }
        if (found < 0)
            for (int i : remaining) {
                auto ps = find_exact_path(g, pairs[i].first, pairs[i].second, ell - 1, pool,
                                          opt.budget, &rng);
                if (!ps.path.empty()) {
                    found = i;
                    path = std::move(ps.path);
                    break;
                }
            }
        if (found < 0)
            throw StageFailure("Phase2", std::to_string(remaining.size()) + " pairs left, none connectable");
        for (int v : path_internal_set(path)) pool.reset(v);
        paths[found] = std::move(path);
        remaining.erase(std::find(remaining.begin(), remaining.end(), found));
    }

    // Phase 3
    std::vector<int> left = pool.to_vector();
    if (static_cast<int>(left.size()) != plan.leftover())
        throw ArithmeticMismatch("leftover " + std::to_string(left.size()) + " != (l-2)s - r");
    shuffle_in_place(left, rng);
    std::vector<std::vector<int>> groups(s);
    for (size_t j = 0; j < left.size(); ++j) groups[j % s].push_back(left[j]);
    Bitset w1avail(n);
    for (int v : plan.parts[0]) w1avail.set(v);
    int tmax = (static_cast<int>(left.size()) + s - 1) / s;
    auto mins_for = [&](int t) {
        if (t == 0) return std::vector<int>{3};
        std::vector<int> m(t + 1, opt.segment_min);
        m.front() = std::max(m.front(), 2);
        m.back() = std::max(m.back(), 2);
        return m;
    };
    bool star = opt.completion == CompletionRoute::StarMatching ||
                (opt.completion == CompletionRoute::Auto &&
                 !split_lengths(ell - 1 - 2 * tmax, mins_for(tmax)).empty() &&
                 static_cast<int>(plan.parts[0].size()) - static_cast<int>(plan.parts[0].size()) / 4 >=
                     2 * s + 2 * static_cast<int>(left.size()));
    info.completion_route = star ? "star-matching" : "direct";
    if (star) {
        std::vector<int> w1 = plan.parts[0];
        shuffle_in_place(w1, rng);
        Bitset t1(n), t2(n);
        for (size_t i = 0; i < w1.size(); ++i) (i < w1.size() / 4 ? t2 : t1).set(w1[i]);
        std::vector<int> centers, f(n, 0);
        for (int i : remaining) {
            centers.push_back(pairs[i].first);
            centers.push_back(pairs[i].second);
            f[pairs[i].first] = f[pairs[i].second] = 1;
        }
        for (int u : left) {
            centers.push_back(u);
            f[u] = 2;
        }
        int64_t val = 0;
        auto sm = star_matching_flow(g, VertexSet(n, centers), VertexSet(t1), f, &val);
        if (val != 2 * static_cast<int64_t>(remaining.size()) + 2 * static_cast<int64_t>(left.size()))
            throw StageFailure("Phase3", "no star matching into T1");
        for (const auto& [c, leaves] : sm.stars)
            for (int v : leaves) t1.reset(v), w1avail.reset(v);
        for (size_t gi = 0; gi < remaining.size(); ++gi) {
            int i = remaining[gi];
            auto [x, y] = pairs[i];
            const auto& grp = groups[gi];
            int t = static_cast<int>(grp.size());
            auto lens = split_lengths(ell - 1 - 2 * t, mins_for(t));
            if (lens.empty()) throw StageFailure("Phase3", "segments do not fit");
            // anchors: x -> x1 ... v1 u1 v2 ... y1 -> y
            std::vector<int> path{x, sm.leaves_of(x)->front()};
            std::vector<int> stops;
            for (int u : grp) stops.push_back(u);
            for (size_t j = 0; j <= stops.size(); ++j) {
                int from = path.back();
                int to = j < stops.size() ? sm.leaves_of(stops[j])->at(0) : sm.leaves_of(y)->front();
                int len = lens[j] - (j == 0) - (j == stops.size());
                Bitset both = t1;
                both |= t2;
                auto ps = find_exact_path(g, from, to, len, t1, opt.budget, &rng);
                if (ps.path.empty()) ps = find_exact_path(g, from, to, len, both, opt.budget, &rng);
                if (ps.path.empty()) throw StageFailure("Phase3", "segment not found");
                for (size_t k = 1; k < ps.path.size(); ++k) {
                    path.push_back(ps.path[k]);
                    if (k + 1 < ps.path.size()) t1.reset(ps.path[k]), t2.reset(ps.path[k]), w1avail.reset(ps.path[k]);
                }
                if (j < stops.size()) {
                    path.push_back(stops[j]);
                    path.push_back(sm.leaves_of(stops[j])->at(1));
                } else {
                    path.push_back(y);
                }
            }
            paths[i] = std::move(path);
        }
    } else {
        for (size_t gi = 0; gi < remaining.size(); ++gi) {
            int i = remaining[gi];
            Bitset req(n), pl = w1avail;
            for (int u : groups[gi]) req.set(u), pl.set(u);
            auto p = find_constrained_path(g, pairs[i].first, pairs[i].second, ell - 1, pl, {},
                                           &req, opt.budget, rng);
            if (p.empty()) throw StageFailure("Phase3", "no path through leftover group");
            for (int v : path_internal_set(p)) w1avail.reset(v);
            paths[i] = std::move(p);
        }
    }
    std::vector<int> u = w1avail.to_vector();
    if (static_cast<int>(u.size()) != r)
        throw ArithmeticMismatch("|W1'| = " + std::to_string(u.size()) + ", expected r");
    auto absorbed = activate_absorbers(st, u);
    for (int i = 0; i < 3 * r; ++i) paths[i] = std::move(absorbed[i]);
    auto chk = verify_path_cover(g, w, pairs, ell, paths);
    if (!chk.ok) throw StageFailure("Verify", chk.violation);
    return paths;
}

}  // namespace detail

// Disjoint (x_i,y_i)-paths with l vertices covering W exactly.
inline PathCoverResult path_cover(const Graph& g, const VertexSet& w,
                                  const std::vector<std::pair<int, int>>& pairs, int ell,
                                  const PathCoverOptions& opt = {}) {
    check_cover_identity(w, pairs.size(), ell);
    std::vector<char> seen(g.n(), 0);
    for (auto [x, y] : pairs) {
        if (w.contains(x) || w.contains(y)) throw PreconditionViolated("pair vertex inside W");
        if (x == y || seen[x] || seen[y]) throw PreconditionViolated("pairs must be disjoint");
        seen[x] = seen[y] = 1;
    }
    PathCoverResult out;
    if (pairs.empty()) return out;
    std::string last;
    for (int a = 0; a < std::max(1, opt.attempts); ++a) {
        ++out.attempts;
        try {
            out.paths = detail::path_cover_attempt(g, w, pairs, ell, opt, derive_seed(opt.seed, a), out);
            return out;
        } catch (const StageFailure& e) {
            out.failures.push_back(e.what());
            last = e.stage();
        }
    }
    throw StageFailure(last, "path cover failed after " + std::to_string(out.attempts) +
                                 " attempts; last: " + out.failures.back());
}

namespace detail {

// Kuhn augmenting path for the one-internal-vertex case.
inline bool kuhn_augment(int i, const std::vector<std::vector<int>>& cand, std::vector<int>& owner,
                         std::vector<char>& seen) {
    for (int v : cand[i]) {
        if (seen[v]) continue;
        seen[v] = 1;
        if (owner[v] < 0 || kuhn_augment(owner[v], cand, owner, seen)) {
            owner[v] = i;
            return true;
        }
    }
    return false;
}

struct DirectCoverSearch {
    const Graph& g;
    const std::vector<std::pair<int, int>>& pairs;
    int len;  // edges per path
    uint64_t budget;
    uint64_t spent = 0;
    Rng* noise;
    std::vector<int> order;
    Bitset pool;
    std::vector<std::vector<int>> paths;

    // Extends paths[order[k]] from its current tail; at the end of a path
    // moves on to the next pair.
    bool grow(size_t k, std::vector<int>& cur) {
        if (++spent > budget) return false;
        int idx = order[k];
        int y = pairs[idx].second;
        int rem = len - (static_cast<int>(cur.size()) - 1);
        int at = cur.back();
        if (rem == 1) {
            if (!g.has_edge(at, y)) return false;
            cur.push_back(y);
            paths[idx] = cur;
            cur.pop_back();
            if (k + 1 == order.size()) return pool.none();
            std::vector<int> next{pairs[order[k + 1]].first};
            if (grow(k + 1, next)) return true;
            return false;
        }
        std::vector<std::pair<int, int>> cand;
        for (int v : g.adj(at)) {
            if (!pool.test(v)) continue;
            if (rem == 2 && !g.has_edge(v, y)) continue;
            int key = g.degree_into(v, pool);
            if (noise) key = key * 4 + static_cast<int>(uniform_below(*noise, 4));
            cand.emplace_back(key, v);
        }
        std::sort(cand.begin(), cand.end());
        for (auto [key, v] : cand) {
            pool.reset(v);
            cur.push_back(v);
            bool ok = grow(k, cur);
            cur.pop_back();
            pool.set(v);
            if (ok) return true;
            if (spent > budget) return false;
        }
        return false;
    }
};

}  // namespace detail

// Exact cover without absorbers, for instances too small for the absorbing
// plan. One internal vertex per path is a bipartite matching; longer paths
// are found by chronological backtracking over all pairs, restarted with
// fresh tie-breaking.
inline std::vector<std::vector<int>> path_cover_direct(const Graph& g, const VertexSet& w,
                                                       const std::vector<std::pair<int, int>>& pairs,
                                                       int ell, uint64_t budget = 200000,
                                                       int attempts = 8, uint64_t seed = 1) {
    if (ell < 2) throw InvalidParameter("l must be >= 2");
    check_cover_identity(w, pairs.size(), ell);
    int P = static_cast<int>(pairs.size());
    std::vector<std::vector<int>> paths(P);
    if (P == 0) return paths;
    if (ell == 2) {
        for (int i = 0; i < P; ++i) {
            if (!g.has_edge(pairs[i].first, pairs[i].second))
                throw SearchExhausted("pair " + std::to_string(i) + " is not an edge");
            paths[i] = {pairs[i].first, pairs[i].second};
        }
        return paths;
    }
    if (ell == 3) {
        std::vector<std::vector<int>> cand(P);
        for (int i = 0; i < P; ++i)
            for (int v : w)
                if (g.has_edge(pairs[i].first, v) && g.has_edge(v, pairs[i].second))
                    cand[i].push_back(v);
        std::vector<int> owner(g.n(), -1);
        for (int i = 0; i < P; ++i) {
            std::vector<char> seen(g.n(), 0);
            if (!detail::kuhn_augment(i, cand, owner, seen))
                throw SearchExhausted("no common neighbour system for one-vertex paths");
        }
        for (int v : w) paths[owner[v]] = {pairs[owner[v]].first, v, pairs[owner[v]].second};
        return paths;
    }
    for (int a = 0; a < std::max(1, attempts); ++a) {
        Rng rng(derive_seed(seed, a));
        detail::DirectCoverSearch s{g, pairs, ell - 1, budget, 0, a ? &rng : nullptr, {}, w.bits(), {}};
        s.paths.assign(P, {});
        for (int i = 0; i < P; ++i) s.order.push_back(i);
        shuffle_in_place(s.order, rng);
        std::vector<int> start{pairs[s.order[0]].first};
        if (s.grow(0, start)) {
            auto chk = verify_path_cover(g, w, pairs, ell, s.paths);
            if (!chk.ok) throw std::logic_error("direct cover produced " + chk.violation);
            return s.paths;
        }
    }
    throw SearchExhausted("direct cover: no exact cover found in " + std::to_string(attempts) +
                          " attempts");
}

// Hypotheses of the cover theorem at scale n, evaluated literally.
inline std::vector<Inequality> path_cover_regime_report(double n, int ell, double d, double C) {
    double wsize = (ell - 2) * n / ell;
    double m = std::ceil(wsize / (2 * d));
    std::vector<Inequality> out;
    out.push_back({"d >= C*l*sqrt(n)", d, C * ell * std::sqrt(n), false});
    out.back().holds = out.back().lhs >= out.back().rhs;
    out.push_back({"m = ceil(|W|/2d) < sqrt(n)/(C*l)", m, std::sqrt(n) / (C * ell), false});
    out.back().holds = out.back().lhs < out.back().rhs;
    out.push_back({"l >= 200", static_cast<double>(ell), 200, false});
    out.back().holds = ell >= 200;
    out.push_back({"r = n/(10^4 l) >= 1", n / (1e4 * ell), 1, false});
    out.back().holds = out.back().lhs >= 1;
    return out;
}

}  // namespace spanex
