#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/embedding.hpp"
#include "spanex/extendable.hpp"
#include "spanex/graph.hpp"
#include "spanex/matching.hpp"
#include "spanex/path_cover.hpp"
#include "spanex/search.hpp"
#include "spanex/spectral.hpp"
#include "spanex/tree.hpp"
#include "spanex/tree_array.hpp"

namespace spanex {

enum class Theorem { Th1, Th2 };
enum class CaseTag { ManyLeaves, CaseA, CaseB, CaseC, Th2Pendant, Th2Caterpillar };

inline const char* case_name(CaseTag c) {
    switch (c) {
        case CaseTag::ManyLeaves: return "MANY_LEAVES";
        case CaseTag::CaseA: return "CASE_A";
        case CaseTag::CaseB: return "CASE_B";
        case CaseTag::CaseC: return "CASE_C";
        case CaseTag::Th2Pendant: return "TH2_PENDANT";
        case CaseTag::Th2Caterpillar: return "TH2_CATERPILLAR";
    }
    return "?";
}

inline const char* theorem_name(Theorem t) { return t == Theorem::Th1 ? "th1" : "th2"; }

struct PipelineParams {
    Theorem theorem = Theorem::Th1;
    bool strict = false;
    int n = 0;
    int delta = 3;
    double d = 1;
    int h = 3;    // stripping depth
    int k = 18;   // bare path length on T_h
    int k2 = 12;  // caterpillar length for th2
    int slack = -1;                // absolute slack; -1 derives it from slack_fraction
    double slack_fraction = 0.25;  // of the final-phase reservoir
    bool use_all = true;           // take every qualifying structure, not only the counted minimum
    double C = 1e4;                // constant of the square-root theorem
    int partition_retries = 20;
    int cert_trials = 200;
    int attempts = 6;
    uint64_t placement_budget = 2000000;
    int log_base = 2;

    int m() const { return std::max(1, static_cast<int>(std::ceil(n / (2 * d) - 1e-9))); }
    double log_n() const { return std::log(static_cast<double>(n)) / std::log(log_base); }

    // Full-scale constants: h = ceil(sqrt(log n)), k = ceil(log^3 n).
    static PipelineParams strict_scale(int n, double d, int delta, Theorem th = Theorem::Th1) {
        PipelineParams p;
        p.theorem = th;
        p.strict = true;
        p.n = n;
        p.d = d;
        p.delta = delta;
        double l = std::log2(static_cast<double>(n));
        p.h = static_cast<int>(std::ceil(std::sqrt(l) - 1e-12));
        p.k = static_cast<int>(std::ceil(l * l * l - 1e-9));
        p.k2 = 800;
        p.use_all = false;
        return p;
    }

    static PipelineParams desk(int n, double d, int delta, Theorem th = Theorem::Th1) {
        PipelineParams p;
        p.theorem = th;
        p.n = n;
        p.d = d;
        p.delta = delta;
        return p;
    }
};

// Slack reserved in each case by the strict sizing, as a multiple of delta*m.
inline int strict_slack_factor(CaseTag c) {
    switch (c) {
        case CaseTag::CaseC:
        case CaseTag::Th2Caterpillar: return 21;
        default: return 22;
    }
}

// ---------------------------------------------------------------------------
// Strict-mode inequality chains.

inline std::vector<Inequality> strict_report_th1(double n, double d, int delta) {
    std::vector<Inequality> out;
    auto add = [&](std::string name, double lhs, double rhs, bool holds) {
        out.push_back({std::move(name), lhs, rhs, holds});
    };
    double logn = std::log2(n);
    double sq = std::sqrt(logn);
    double hyp = std::pow(delta, 5 * sq);
    add("d >= Delta^(5*sqrt(log n))", d, hyp, d >= hyp);
    add("n > d", n, d, n > d);
    double m = n / (2 * d);
    add("m = n/(2d) >= 1", m, 1, m >= 1);
    RecParameters rp = rec_parameters(n, std::max(d, 1.0), std::max(delta, 2));
    for (size_t i = 1; i < rp.chain.size(); ++i) out.push_back(rp.chain[i]);
    double h = std::ceil(sq - 1e-12);
    double k = std::ceil(logn * logn * logn - 1e-9);
    add("k' = k - 4h >= 1", k - 4 * h, 1, k - 4 * h >= 1);
    double part = n / (4 * k * std::pow(delta, h));
    double di = part * d / (5 * n);
    add("d_i >= 2 log n", di, 2 * logn, di >= 2 * logn);
    return out;
}

inline std::vector<Inequality> strict_report_th2(double n, double d, int delta, double C) {
    std::vector<Inequality> out;
    auto add = [&](std::string name, double lhs, double rhs, bool holds) {
        out.push_back({std::move(name), lhs, rhs, holds});
    };
    double rhs = C * delta * std::sqrt(n);
    add("d >= C*Delta*sqrt(n)", d, rhs, d >= rhs);
    double cap = std::sqrt(n) / (2 * C);
    add("Delta <= sqrt(n)/(2C)", delta, cap, delta <= cap);
    add("n > d", n, d, n > d);
    double k = 800;
    double r = n / (8 * k * delta);
    add("r = n/(8k*Delta) >= 1", r, 1, r >= 1);
    double m = n / (2 * d);
    double v2 = n / (16 * delta) - 21 * delta * m;
    add("n/(16*Delta) - 21*Delta*m >= n/(32*Delta)", v2, n / (32 * delta),
        v2 >= n / (32 * delta));
    return out;
}

inline std::vector<Inequality> strict_report(const PipelineParams& p) {
    return p.theorem == Theorem::Th1 ? strict_report_th1(p.n, p.d, p.delta)
                                     : strict_report_th2(p.n, p.d, p.delta, p.C);
}

inline std::optional<Inequality> strict_refusal(const PipelineParams& p) {
    for (const auto& q : strict_report(p))
        if (!q.holds) return q;
    return std::nullopt;
}

inline std::string describe(const Inequality& q) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s (lhs=%.6g, rhs=%.6g)", q.name.c_str(), q.lhs, q.rhs);
    return buf;
}

// Room the almost-spanning embedding needs: |V1| - |T'| > 4 Delta ceil(|V1|/2d_1)
// with d_1 = |V1| d / 5n.
inline Inequality phase1_slack(int v1, int tprime, double d, int n, int delta) {
    double d1 = v1 * d / (5.0 * n);
    double need = 4.0 * delta * std::ceil(v1 / (2 * d1) - 1e-9);
    double have = v1 - tprime;
    return {"|V1|-|T'| > 4*Delta*ceil(|V1|/(2d_1))", have, need, have > need};
}

// ---------------------------------------------------------------------------
// Random partition with per-part expansion certificates.

struct PartitionPlan {
    std::vector<VertexSet> parts;
    std::vector<double> targets;  // d_i = |V_i| d / (5n)
    std::vector<ExpanderCertificate> certificates;
    std::vector<std::string> warnings;
    int attempts = 0;
};

inline PartitionPlan partition_with_expansion(const Graph& g, const VertexSet& w,
                                              const std::vector<int>& sizes, double d, int retries,
                                              uint64_t seed, int trials = 200,
                                              bool strict = false) {
    long total = 0;
    for (int s : sizes) {
        if (s < 0) throw InvalidParameter("negative part size");
        total += s;
    }
    if (total != w.size())
        throw InvalidParameter("part sizes sum to " + std::to_string(total) + ", |W| = " +
                               std::to_string(w.size()));
    int n = g.n();
    double logn = std::log2(std::max(2, n));
    PartitionPlan plan;
    for (int s : sizes) plan.targets.push_back(s * d / (5.0 * n));
    if (static_cast<double>(sizes.size()) > logn)
        plan.warnings.push_back("more parts than log n");
    for (size_t i = 0; i < sizes.size(); ++i)
        if (plan.targets[i] < 2 * logn)
            plan.warnings.push_back("d_" + std::to_string(i + 1) + " = " +
                                    std::to_string(plan.targets[i]) + " < 2 log n");
    if (strict && !plan.warnings.empty()) throw PreconditionViolated(plan.warnings.front());
    for (size_t i = 0; i < sizes.size(); ++i)
        if (!strict && sizes[i] > 0 && plan.targets[i] < 1)
            plan.warnings.push_back("part " + std::to_string(i + 1) + " left uncertified (d_i < 1)");
    std::vector<int> failures(sizes.size(), 0);
    for (int a = 0; a < std::max(1, retries); ++a) {
        ++plan.attempts;
        Rng rng(derive_seed(seed, a));
        std::vector<int> mem = w.members();
        shuffle_in_place(mem, rng);
        plan.parts.clear();
        plan.certificates.clear();
        size_t at = 0;
        bool ok = true;
        for (size_t i = 0; i < sizes.size() && ok; ++i) {
            std::vector<int> part(mem.begin() + at, mem.begin() + at + sizes[i]);
            at += sizes[i];
            plan.parts.emplace_back(n, part);
            if (sizes[i] == 0 || plan.targets[i] <= 0 || (!strict && plan.targets[i] < 1)) {
                ExpanderCertificate c;  // vacuous claim, d1 = 0
                c.kind = ExpanderCertificate::Kind::Exact;
                c.claim = ExpanderCertificate::Claim::ExpandsInto;
                c.n = n;
                plan.certificates.push_back(c);
                continue;
            }
            auto cert = sampled_certificate(g, plan.parts.back(), plan.targets[i], trials,
                                            derive_seed(seed, 1000 + a * 16 + i));
            if (!cert.ok()) {
                ++failures[i];
                ok = false;
                break;
            }
            plan.certificates.push_back(cert.value());
        }
        if (ok) return plan;
    }
    std::ostringstream os;
    os << "partition not certified after " << plan.attempts << " attempts; failures per part:";
    for (int f : failures) os << ' ' << f;
    throw RetriesExhausted(os.str());
}

// ---------------------------------------------------------------------------
// Case dispatch.

struct EmbeddingPlan {
    CaseTag tag = CaseTag::ManyLeaves;
    Theorem theorem = Theorem::Th1;
    int h = 0, k = 0;
    std::vector<int> level_sizes;
    double threshold = 0;
    size_t payload = 0;
    int r = 0;                 // counted minimum of structures
    int class_counts[3] = {0, 0, 0};  // bare / caterpillar / pendant-star paths
    bool bare = false;         // th2 caterpillar subcase 1

    // MANY_LEAVES: chains[i] = a_h, ..., a_2, a_1 with a_1 in B.
    // CASE_A and bare caterpillars: chains[i] = Q_i, internals removed.
    // CASE_B and leggy caterpillars: chains[i] = a_0, ..., a_k'.
    // CASE_C: chains[i] = tree path a_i ... z_i ... r_i, c_i.
    std::vector<std::vector<int>> chains;
    std::vector<std::vector<int>> outward;  // CASE_B: x_v ... a_0
    std::vector<std::vector<int>> second;   // CASE_C: z_i ... b_i
    std::vector<int> centers;  // B (MANY_LEAVES, TH2_PENDANT), C (CASE_C), L+ (CASE_B, leggy)
    std::vector<int> leaves;   // C (MANY_LEAVES, TH2_PENDANT), C- (CASE_C), L (CASE_B, leggy)
    std::vector<int> roots, zs, as, bs;  // CASE_C role sets; roots also A for TH2_PENDANT
    std::vector<PendantStar> stars;
    std::vector<int> star_count;  // s(v) indexed by tree vertex (TH2_PENDANT)
    std::vector<int> removed;     // V(T) - V(T'), sorted
    int path_vertices = 0;        // vertices per cover path (l)
    int slack = 0;
    std::vector<int> part_sizes;
    std::string size_formula;
    std::vector<std::string> notes;
};

namespace detail {

inline std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Q_i as a caterpillar trimmed to length len with a_1 the first internal
// vertex carrying a leg. Returns a_0..a_len and the index of a_0 in q.
inline std::pair<std::vector<int>, int> trim_leggy(const Tree& t, const std::vector<int>& q,
                                                   int len, int& direction) {
    int kq = static_cast<int>(q.size()) - 1;
    int p = -1;
    for (int i = 1; i < kq && p < 0; ++i)
        for (int u : t.adj(q[i]))
            if (t.is_leaf(u)) {
                p = i;
                break;
            }
    if (p < 0) throw std::logic_error("caterpillar without legs");
    std::vector<int> out;
    if (p - 1 + len <= kq) {
        direction = 1;
        for (int j = 0; j <= len; ++j) out.push_back(q[p - 1 + j]);
        return {out, p - 1};
    }
    direction = -1;
    for (int j = 0; j <= len; ++j) out.push_back(q[p + 1 - j]);
    return {out, p + 1};
}

inline int clamp_slack(const PipelineParams& p, CaseTag tag, int reservoir) {
    int s;
    if (p.strict)
        s = strict_slack_factor(tag) * p.delta * p.m();
    else if (p.slack >= 0)
        s = p.slack;
    else
        s = static_cast<int>(std::floor(p.slack_fraction * reservoir));
    if (!p.strict) s = std::max(0, std::min(s, reservoir));
    return s;
}

}  // namespace detail

inline EmbeddingPlan plan_embedding(const Tree& t, const PipelineParams& p, uint64_t seed = 1) {
    EmbeddingPlan plan;
    plan.theorem = p.theorem;
    plan.h = p.h;
    plan.k = p.theorem == Theorem::Th1 ? p.k : p.k2;
    int n = t.n();
    int delta = std::max(2, t.max_degree());
    Rng rng(seed);
    auto leg_count = [&](int v) {
        int c = 0;
        for (int u : t.adj(v)) c += t.is_leaf(u);
        return c;
    };

    if (p.theorem == Theorem::Th2) {
        Dichotomy dich = star_or_caterpillar(t, p.k2);
        plan.threshold = dich.threshold;
        plan.payload = dich.payload_size();
        plan.r = std::max(1, static_cast<int>(std::floor(n / (8.0 * p.k2 * delta))));
        if (dich.branch == Dichotomy::Branch::PendantStars) {
            plan.tag = CaseTag::Th2Pendant;
            std::vector<char> is_center(n, 0), is_root(n, 0);
            auto stars = dich.stars;
            if (!p.use_all) {
                shuffle_in_place(stars, rng);
                int want = std::max(1, static_cast<int>(std::ceil(dich.threshold - 1e-9)));
                if (static_cast<int>(stars.size()) > want) stars.resize(want);
            }
            // a center may not double as the root of another chosen star
            for (const auto& s : stars) {
                if (is_root[s.center] || is_center[s.root]) continue;
                is_center[s.center] = 1;
                is_root[s.root] = 1;
                plan.stars.push_back(s);
            }
            std::sort(plan.stars.begin(), plan.stars.end(),
                      [](const PendantStar& a, const PendantStar& b) { return a.center < b.center; });
            plan.star_count.assign(n, 0);
            for (const auto& s : plan.stars) {
                plan.centers.push_back(s.center);
                plan.roots.push_back(s.root);
                ++plan.star_count[s.root];
                for (int l : s.leaves) plan.leaves.push_back(l);
            }
            plan.roots = detail::sorted_unique(plan.roots);
            plan.leaves = detail::sorted_unique(plan.leaves);
            plan.removed = detail::sorted_unique([&] {
                auto v = plan.centers;
                v.insert(v.end(), plan.leaves.begin(), plan.leaves.end());
                return v;
            }());
            int c = static_cast<int>(plan.leaves.size());
            plan.slack = detail::clamp_slack(p, plan.tag, c);
            int rest = c - plan.slack;
            plan.part_sizes = {n - static_cast<int>(plan.removed.size()) + plan.slack,
                               static_cast<int>(plan.centers.size()), rest - rest / 2, rest / 2};
            plan.size_formula = "|V1|=n-|B|-|C|+slack, |V2|=|B|, |V3|=|V4|=(|C|-slack)/2";
            return plan;
        }
        plan.tag = CaseTag::Th2Caterpillar;
        std::vector<const Caterpillar*> bare, leggy;
        for (const auto& c : dich.caterpillars) {
            bool any = false;
            for (const auto& l : c.legs) any = any || !l.empty();
            (any ? leggy : bare).push_back(&c);
        }
        plan.class_counts[0] = static_cast<int>(bare.size());
        plan.class_counts[1] = static_cast<int>(leggy.size());
        plan.bare = static_cast<int>(bare.size()) >= plan.r;
        auto& chosen = plan.bare ? bare : leggy;
        if (!p.use_all && static_cast<int>(chosen.size()) > plan.r) chosen.resize(plan.r);
        if (plan.bare) {
            for (auto* c : chosen) {
                plan.chains.push_back(c->spine);
                for (size_t i = 1; i + 1 < c->spine.size(); ++i) plan.removed.push_back(c->spine[i]);
            }
            plan.path_vertices = p.k2 + 1;
            int internals = static_cast<int>(plan.removed.size());
            plan.slack = detail::clamp_slack(p, plan.tag, internals);
            plan.part_sizes = {n - internals + plan.slack, internals - plan.slack};
            plan.size_formula = "|V1|=|T'|+slack, |V2|=(k-1)r-slack";
        } else {
            int len = p.k2 / 2;
            for (auto* c : chosen) {
                int dir;
                auto q = detail::trim_leggy(t, c->spine, len, dir).first;
                plan.chains.push_back(q);
                for (int j = 1; j < len; ++j) {
                    plan.removed.push_back(q[j]);
                    if (leg_count(q[j]) > 0) plan.centers.push_back(q[j]);
                    for (int u : t.adj(q[j]))
                        if (t.is_leaf(u)) plan.leaves.push_back(u);
                }
            }
            plan.removed.insert(plan.removed.end(), plan.leaves.begin(), plan.leaves.end());
            plan.path_vertices = len;
            int P = static_cast<int>(plan.chains.size());
            int L = static_cast<int>(plan.leaves.size());
            plan.slack = detail::clamp_slack(p, plan.tag, L);
            plan.part_sizes = {n - static_cast<int>(plan.removed.size()) + plan.slack, P,
                               (len - 2) * P, L - plan.slack};
            plan.size_formula = "|V1|=|T'|+slack, |V2|=r, |V3|=(k'-2)r, |V4|=|L|-slack";
        }
        plan.removed = detail::sorted_unique(plan.removed);
        plan.centers = detail::sorted_unique(plan.centers);
        plan.leaves = detail::sorted_unique(plan.leaves);
        return plan;
    }

    // th1+: decompose, then the dichotomy on T_h.
    TreeDecomposition dec = decompose_levels(t, p.h);
    int h = std::min(p.h, static_cast<int>(dec.levels.size()) - 1);
    while (h > 2 && dec.levels[h].n() < 3) --h;
    if (h < 2) throw InvalidParameter("stripping depth must be at least 2");
    if (h != p.h) plan.notes.push_back("stripping depth lowered to " + std::to_string(h));
    plan.h = h;
    plan.level_sizes = dec.sizes;
    const Tree& th = dec.levels[h];
    int nh = th.n();
    if (nh < 3) throw InvalidParameter("tree too small for the level decomposition");
    Dichotomy dich = leaf_or_barepath(th, p.k);
    plan.threshold = dich.threshold;
    plan.payload = dich.payload_size();

    if (dich.branch == Dichotomy::Branch::Leaves) {
        plan.tag = CaseTag::ManyLeaves;
        std::vector<int> us;
        for (int v : dich.leaves) us.push_back(th.label(v));
        shuffle_in_place(us, rng);
        if (!p.use_all) {
            int want = std::max(1, static_cast<int>(std::ceil(dich.threshold - 1e-9)));
            if (static_cast<int>(us.size()) > want) us.resize(want);
        }
        std::sort(us.begin(), us.end());
        for (int u : us) {
            std::vector<int> chain{u};
            for (int depth = h - 1; depth >= 1; --depth) {
                std::vector<int> cand;
                for (int x : t.adj(chain.back()))
                    if (dec.depth[x] == depth) cand.push_back(x);
                if (cand.empty()) throw std::logic_error("no descendant at depth " + std::to_string(depth));
                chain.push_back(cand[uniform_below(rng, cand.size())]);
            }
            int b = chain.back();
            plan.centers.push_back(b);
            for (int x : t.adj(b))
                if (t.is_leaf(x)) plan.leaves.push_back(x);
            plan.chains.push_back(std::move(chain));
        }
        plan.removed = plan.centers;
        plan.removed.insert(plan.removed.end(), plan.leaves.begin(), plan.leaves.end());
        plan.removed = detail::sorted_unique(plan.removed);
        int B = static_cast<int>(plan.centers.size());
        int C = static_cast<int>(plan.leaves.size());
        plan.slack = detail::clamp_slack(p, plan.tag, C);
        int rest = C - plan.slack;
        plan.part_sizes = {n - B - C + plan.slack, B, rest - rest / 2, rest / 2};
        plan.size_formula = "|V1|=n-|B|-|C|+slack, |V2|=|B|, |V3|=|V4|=(|C|-slack)/2";
        return plan;
    }

    int kq = p.k - 4 * h;
    if (kq < 2) throw InvalidParameter("k - 4h must be >= 2");
    std::vector<std::vector<int>> qa, qb, qc;
    std::vector<std::vector<int>> pa, pb, pc;  // the full P_i, as T ids
    for (const auto& pth : dich.paths) {
        std::vector<int> full;
        for (int v : pth) full.push_back(th.label(v));
        std::vector<int> q(full.begin() + 2 * h, full.begin() + 2 * h + kq + 1);
        bool bare = true, cat = true;
        for (int i = 1; i < kq; ++i) {
            int v = q[i];
            if (t.degree(v) != 2) bare = false;
            for (int u : t.adj(v))
                if (u != q[i - 1] && u != q[i + 1] && !t.is_leaf(u)) cat = false;
        }
        if (bare) {
            qa.push_back(q);
            pa.push_back(full);
        } else if (cat) {
            qb.push_back(q);
            pb.push_back(full);
        } else {
            qc.push_back(q);
            pc.push_back(full);
        }
    }
    plan.class_counts[0] = static_cast<int>(qa.size());
    plan.class_counts[1] = static_cast<int>(qb.size());
    plan.class_counts[2] = static_cast<int>(qc.size());
    plan.r = std::max(1, static_cast<int>(std::floor(nh / (8.0 * p.k))));
    int half = (plan.r + 1) / 2;
    if (static_cast<int>(qa.size()) >= plan.r)
        plan.tag = CaseTag::CaseA;
    else if (static_cast<int>(qb.size()) >= half)
        plan.tag = CaseTag::CaseB;
    else
        plan.tag = CaseTag::CaseC;
    auto take = [&](std::vector<std::vector<int>>& q, std::vector<std::vector<int>>& full, int want) {
        if (!p.use_all && static_cast<int>(q.size()) > want) {
            q.resize(want);
            full.resize(want);
        }
    };

    if (plan.tag == CaseTag::CaseA) {
        take(qa, pa, plan.r);
        for (const auto& q : qa) {
            plan.chains.push_back(q);
            for (int i = 1; i < kq; ++i) plan.removed.push_back(q[i]);
        }
        plan.removed = detail::sorted_unique(plan.removed);
        plan.path_vertices = kq + 1;
        int internals = static_cast<int>(plan.removed.size());
        plan.slack = detail::clamp_slack(p, plan.tag, internals);
        plan.part_sizes = {n - internals + plan.slack, internals - plan.slack};
        plan.size_formula = "|V1|=|T'|+slack, |V2|=(k'-1)r-slack";
        return plan;
    }

    if (plan.tag == CaseTag::CaseB) {
        take(qb, pb, half);
        int len = (kq + 1) / 2;
        if (len < 2) throw InvalidParameter("trimmed caterpillar too short");
        for (size_t i = 0; i < qb.size(); ++i) {
            int dir;
            auto [q, at] = detail::trim_leggy(t, qb[i], len, dir);
            // a_0 sits at index 2h + at of P_i; walk h-1 steps away from a_1
            int a0 = 2 * h + at;
            std::vector<int> out;
            for (int j = h - 1; j >= 0; --j) out.push_back(pb[i][a0 - dir * j]);
            plan.outward.push_back(out);
            plan.chains.push_back(q);
            for (int j = 1; j < len; ++j) {
                plan.removed.push_back(q[j]);
                if (leg_count(q[j]) > 0) plan.centers.push_back(q[j]);
                for (int u : t.adj(q[j]))
                    if (t.is_leaf(u)) plan.leaves.push_back(u);
            }
        }
        plan.removed.insert(plan.removed.end(), plan.leaves.begin(), plan.leaves.end());
        plan.removed = detail::sorted_unique(plan.removed);
        plan.centers = detail::sorted_unique(plan.centers);
        plan.leaves = detail::sorted_unique(plan.leaves);
        plan.path_vertices = len;
        int P = static_cast<int>(plan.chains.size());
        int L = static_cast<int>(plan.leaves.size());
        plan.slack = detail::clamp_slack(p, plan.tag, L);
        int rest = L - plan.slack;
        plan.part_sizes = {n - static_cast<int>(plan.removed.size()) + plan.slack, P,
                           rest - rest / 2, (len - 2) * P, rest / 2};
        plan.size_formula = "|V1|=|T'|+slack, |V2|=|A_1|, |V3|=|V5|=(|L|-slack)/2, |V4|=(k'-2)|V2|";
        return plan;
    }

    take(qc, pc, half);
    for (size_t i = 0; i < qc.size(); ++i) {
        const auto& q = qc[i];
        const auto& full = pc[i];
        int zi = -1, branch = -1;
        for (int j = 1; j < kq && zi < 0; ++j)
            for (int u : t.adj(q[j]))
                if (u != q[j - 1] && u != q[j + 1] && !t.is_leaf(u)) {
                    zi = j;
                    branch = u;
                    break;
                }
        int z = q[zi];
        // deepest non-leaf vertex of the branch is the center of a pendant star
        std::vector<int> par(n, -1), dist(n, -1), order{branch};
        par[branch] = z;
        dist[branch] = 1;
        for (size_t x = 0; x < order.size(); ++x)
            for (int u : t.adj(order[x]))
                if (u != par[order[x]] && dist[u] < 0) {
                    par[u] = order[x];
                    dist[u] = dist[order[x]] + 1;
                    order.push_back(u);
                }
        int center = branch;
        for (int v : order)
            if (!t.is_leaf(v) && dist[v] > dist[center]) center = v;
        int root = par[center];
        int zr = dist[center] - 1;
        int zpos = 2 * h + zi;  // index of z in P_i
        int apos = zpos - (h - 1 - zr);
        if (h - 1 - zr < 1 || apos < 0 || zpos + h >= static_cast<int>(full.size()))
            throw std::logic_error("pendant star too deep for the chosen h");
        std::vector<int> seg;
        for (int j = apos; j <= zpos; ++j) seg.push_back(full[j]);
        std::vector<int> up;
        for (int v = root; v != z; v = par[v]) up.push_back(v);
        std::reverse(up.begin(), up.end());
        seg.insert(seg.end(), up.begin(), up.end());
        seg.push_back(center);
        std::vector<int> seg2(full.begin() + zpos, full.begin() + zpos + h + 1);
        plan.chains.push_back(seg);
        plan.second.push_back(seg2);
        plan.centers.push_back(center);
        plan.roots.push_back(root);
        plan.zs.push_back(z);
        plan.as.push_back(full[apos]);
        plan.bs.push_back(seg2.back());
        for (int u : t.adj(center))
            if (t.is_leaf(u)) plan.leaves.push_back(u);
    }
    plan.removed = plan.centers;
    plan.removed.insert(plan.removed.end(), plan.leaves.begin(), plan.leaves.end());
    plan.removed = detail::sorted_unique(plan.removed);
    int Cm = static_cast<int>(plan.leaves.size());
    plan.slack = detail::clamp_slack(p, plan.tag, Cm);
    int rest = Cm - plan.slack;
    plan.part_sizes = {n - static_cast<int>(plan.removed.size()) + plan.slack,
                       static_cast<int>(plan.centers.size()), rest - 2 * (rest / 3), rest / 3,
                       rest / 3};
    plan.size_formula = "|V1|=|T'|+slack, |V2|=|C|, |V3|=|V4|=|V5|=(|C^-|-slack)/3";
    return plan;
}

// ---------------------------------------------------------------------------
// Prune and regrow.

// A tree path whose internal vertices (and what hangs off them) get new
// images. tree_path has s+1 vertices; the first keeps its image.
struct RegrowSegment {
    std::vector<int> tree_path;
    int start_image = -1;
    int end_image = -1;
};

namespace detail {

// Vertices hanging off v: reachable without entering a barrier vertex or an
// unmapped one. Returned in BFS order with parents (v first, parent -1).
inline std::pair<std::vector<int>, std::vector<int>> hanging_tree(const Tree& t, int v,
                                                                  const std::vector<char>& barrier,
                                                                  const std::vector<int>& phi) {
    std::vector<int> order{v}, par{-1};
    std::vector<char> seen(t.n(), 0);
    seen[v] = 1;
    for (size_t i = 0; i < order.size(); ++i)
        for (int u : t.adj(order[i])) {
            if (seen[u] || barrier[u] || phi[u] < 0) continue;
            seen[u] = 1;
            order.push_back(u);
            par.push_back(order[i]);
        }
    return {order, par};
}

inline int rooted_height(const std::vector<int>& order, const std::vector<int>& par) {
    std::map<int, int> depth;
    int h = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        depth[order[i]] = par[i] < 0 ? 0 : depth[par[i]] + 1;
        h = std::max(h, depth[order[i]]);
    }
    return h;
}

// Rooted-tree inclusion: map pattern children into host children so that
// every pattern subtree fits a host subtree.
struct RootedFit {
    std::map<int, std::vector<int>> pc, hc;  // children lists
    std::map<std::pair<int, int>, bool> memo;

    bool fits(int x, int y) {
        auto key = std::make_pair(x, y);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        const auto& a = pc[x];
        const auto& b = hc[y];
        bool ok = a.size() <= b.size() && match(a, b, nullptr);
        memo[key] = ok;
        return ok;
    }

    bool match(const std::vector<int>& a, const std::vector<int>& b, std::vector<int>* out) {
        std::vector<int> owner(b.size(), -1);
        std::function<bool(size_t, std::vector<char>&)> aug = [&](size_t i, std::vector<char>& seen) {
            for (size_t j = 0; j < b.size(); ++j) {
                if (seen[j] || !fits(a[i], b[j])) continue;
                seen[j] = 1;
                if (owner[j] < 0 || aug(owner[j], seen)) {
                    owner[j] = static_cast<int>(i);
                    return true;
                }
            }
            return false;
        };
        for (size_t i = 0; i < a.size(); ++i) {
            std::vector<char> seen(b.size(), 0);
            if (!aug(i, seen)) return false;
        }
        if (out) {
            out->assign(a.size(), -1);
            for (size_t j = 0; j < b.size(); ++j)
                if (owner[j] >= 0) (*out)[owner[j]] = b[j];
        }
        return true;
    }

    void assign(int x, int y, std::map<int, int>& img) {
        img[x] = y;
        std::vector<int> to;
        match(pc[x], hc[y], &to);
        for (size_t i = 0; i < pc[x].size(); ++i) assign(pc[x][i], to[i], img);
    }
};

}  // namespace detail

// Builds the array the regrow needs: an exact-length path per segment and,
// at each internal vertex, a copy of exactly the subtree hanging there. The
// result is a pruned tree array over window.
inline TreeArray build_regrow_array(const Graph& g, const Tree& t, const std::vector<int>& phi,
                                    const std::vector<RegrowSegment>& segs,
                                    const std::vector<char>& barrier, const VertexSet& window,
                                    int s, int delta, uint64_t seed, uint64_t budget = 200000,
                                    int attempts = 6) {
    TreeArray arr;
    for (const auto& sg : segs) {
        if (static_cast<int>(sg.tree_path.size()) != s + 1)
            throw PreconditionViolated("segment length differs from s");
        arr.pairs.emplace_back(sg.start_image, sg.end_image);
    }
    if (segs.empty()) return arr;
    Bitset base = window.bits();
    for (int v : phi)
        if (v >= 0) base.reset(v);
    std::string last;
    for (int a = 0; a < std::max(1, attempts); ++a) {
        Rng rng(derive_seed(seed, a));
        Bitset pool = base;
        arr.paths.clear();
        arr.trees.clear();
        bool ok = true;
        for (size_t i = 0; i < segs.size() && ok; ++i) {
            auto ps = find_exact_path(g, segs[i].start_image, segs[i].end_image, s, pool, budget,
                                      a ? &rng : nullptr);
            if (ps.path.empty()) {
                ok = false;
                last = "no path of length " + std::to_string(s) + " for segment " + std::to_string(i);
                break;
            }
            for (size_t j = 1; j + 1 < ps.path.size(); ++j) pool.reset(ps.path[j]);
            arr.paths.push_back(ps.path);
        }
        for (size_t i = 0; i < segs.size() && ok; ++i) {
            const auto& tp = segs[i].tree_path;
            for (size_t j = 1; j + 1 < tp.size() && ok; ++j) {
                auto [order, par] = detail::hanging_tree(t, tp[j], barrier, phi);
                if (detail::rooted_height(order, par) > s)
                    throw ShapeMismatch("subtree hanging at " + std::to_string(tp[j]) +
                                        " is higher than s=" + std::to_string(s));
                std::map<int, int> local;
                for (size_t x = 0; x < order.size(); ++x) local[order[x]] = static_cast<int>(x);
                std::vector<std::pair<int, int>> edges;
                std::vector<int> kids(order.size(), 0);
                for (size_t x = 1; x < order.size(); ++x) {
                    edges.emplace_back(local[par[x]], static_cast<int>(x));
                    if (++kids[local[par[x]]] > delta)
                        throw ShapeMismatch("subtree hanging at " + std::to_string(tp[j]) +
                                            " branches more than delta");
                }
                RootedImage img;
                int host = arr.paths[i][j];
                img.root = host;
                img.vertices.push_back(host);
                img.parent.push_back(-1);
                if (order.size() > 1) {
                    Tree shape(static_cast<int>(order.size()), edges);
                    PlacementOptions po;
                    po.budget = budget;
                    po.restarts = 2;
                    po.seed = derive_seed(seed, 100 + a * 64 + i * 8 + j);
                    auto pr = place_tree(g, shape, 0, host, pool, Bitset(g.n()), po);
                    if (pr.map.empty()) {
                        ok = false;
                        last = "no room for the subtree hanging at " + std::to_string(tp[j]);
                        break;
                    }
                    auto spar = shape.parents(0);
                    for (int x : shape.bfs_order(0)) {
                        if (x == 0) continue;
                        img.vertices.push_back(pr.map[x]);
                        img.parent.push_back(pr.map[spar[x]]);
                        pool.reset(pr.map[x]);
                    }
                }
                arr.trees.push_back(std::move(img));
            }
        }
        if (ok) return arr;
    }
    throw SearchExhausted("regrow array: " + last);
}

// Removes the images of the segments' internal vertices and everything
// hanging off them, then splices in the array's paths and regrows each
// hanging subtree inside the array tree at the same position.
inline std::vector<int> prune_and_regrow(const Tree& t, const std::vector<int>& phi,
                                         const std::vector<RegrowSegment>& segs,
                                         const TreeArray& arr, const std::vector<char>& barrier) {
    if (segs.empty()) return phi;
    if (arr.paths.size() != segs.size()) throw PreconditionViolated("one array path per segment");
    std::vector<int> out = phi;
    struct Hang {
        int v, host;
        std::vector<int> order, par;
    };
    std::vector<Hang> hangs;
    for (size_t i = 0; i < segs.size(); ++i) {
        const auto& tp = segs[i].tree_path;
        const auto& hp = arr.paths[i];
        if (hp.size() != tp.size())
            throw PreconditionViolated("array path length differs from the ancestor distance");
        if (phi[tp.front()] != hp.front())
            throw PreconditionViolated("segment start is not at its current image");
        for (size_t j = 1; j + 1 < tp.size(); ++j) {
            auto [order, par] = detail::hanging_tree(t, tp[j], barrier, phi);
            hangs.push_back({tp[j], hp[j], order, par});
        }
    }
    for (const auto& h : hangs)
        for (int v : h.order) out[v] = -1;
    for (size_t i = 0; i < segs.size(); ++i) {
        const auto& tp = segs[i].tree_path;
        for (size_t j = 1; j < tp.size(); ++j) out[tp[j]] = arr.paths[i][j];
    }
    for (const auto& h : hangs) {
        const RootedImage* img = arr.tree_at(h.host);
        detail::RootedFit fit;
        for (size_t x = 0; x < h.order.size(); ++x) {
            fit.pc[h.order[x]];
            if (h.par[x] >= 0) fit.pc[h.par[x]].push_back(h.order[x]);
        }
        fit.hc[h.host];
        if (img)
            for (size_t x = 1; x < img->vertices.size(); ++x) {
                fit.hc[img->vertices[x]];
                fit.hc[img->parent[x]].push_back(img->vertices[x]);
            }
        if (!fit.fits(h.v, h.host))
            throw ShapeMismatch("subtree hanging at " + std::to_string(h.v) +
                                " does not fit the array tree at " + std::to_string(h.host));
        std::map<int, int> m;
        fit.assign(h.v, h.host, m);
        for (auto [x, y] : m) out[x] = y;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution.

struct PhaseRecord {
    std::string name;
    std::string detail;
    double millis = 0;
};

struct PipelineResult {
    Embedding embedding;
    EmbeddingPlan plan;
    std::vector<PhaseRecord> phases;
    std::vector<std::string> warnings;
    std::vector<std::string> certificate_kinds;
    bool verified = false;
    int attempts = 0;
    std::vector<std::string> failures;
};

namespace detail {

struct PipelineRun {
    const Graph& g;
    const Tree& t;
    const PipelineParams& p;
    const EmbeddingPlan& plan;
    uint64_t seed;
    std::vector<int> phi;
    PipelineResult& res;
    std::string phase = "Plan";
    std::chrono::steady_clock::time_point clock = std::chrono::steady_clock::now();

    PipelineRun(const Graph& g_, const Tree& t_, const PipelineParams& p_, const EmbeddingPlan& pl,
                uint64_t seed_, PipelineResult& r)
        : g(g_), t(t_), p(p_), plan(pl), seed(seed_), phi(t_.n(), -1), res(r) {}

    void begin(std::string name) {
        phase = std::move(name);
        clock = std::chrono::steady_clock::now();
    }
    void end(std::string detail) {
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock).count();
        res.phases.push_back({phase, std::move(detail), ms});
    }

    Bitset used() const {
        Bitset u(g.n());
        for (int v : phi)
            if (v >= 0) u.set(v);
        return u;
    }
    VertexSet unused() const {
        Bitset u = used();
        Bitset all(g.n());
        all.set_all();
        all.andnot(u);
        return VertexSet(all);
    }

    PartitionPlan partition() {
        begin("Partition");
        auto pp = partition_with_expansion(g, VertexSet::all(g.n()), plan.part_sizes, p.d,
                                           p.partition_retries, derive_seed(seed, 1), p.cert_trials,
                                           p.strict);
        for (const auto& w : pp.warnings) res.warnings.push_back("partition: " + w);
        for (const auto& c : pp.certificates)
            res.certificate_kinds.push_back(ExpanderCertificate::kind_name(c.kind));
        std::ostringstream os;
        os << "sizes";
        for (int s : plan.part_sizes) os << ' ' << s;
        os << "; attempts " << pp.attempts;
        end(os.str());
        return pp;
    }

    // T' = T - removed, embedded into w component by component.
    void embed_rest(const VertexSet& w) {
        begin("Phase1");
        std::vector<char> gone(t.n(), 0);
        for (int v : plan.removed) gone[v] = 1;
        std::vector<int> comp(t.n(), -1);
        std::vector<std::vector<int>> comps;
        for (int v = 0; v < t.n(); ++v) {
            if (gone[v] || comp[v] >= 0) continue;
            std::vector<int> c{v};
            comp[v] = static_cast<int>(comps.size());
            for (size_t i = 0; i < c.size(); ++i)
                for (int u : t.adj(c[i]))
                    if (!gone[u] && comp[u] < 0) {
                        comp[u] = comp[v];
                        c.push_back(u);
                    }
            std::sort(c.begin(), c.end());
            comps.push_back(std::move(c));
        }
        std::stable_sort(comps.begin(), comps.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        int total = 0;
        for (const auto& c : comps) total += static_cast<int>(c.size());
        double d1 = w.size() * p.d / (5.0 * g.n());
        auto room = phase1_slack(w.size(), total, p.d, g.n(), std::max(1, t.max_degree()));
        if (!room.holds) {
            if (p.strict) throw CapacityExceeded("slack check fails: " + describe(room));
            res.warnings.push_back("slack check fails: " + describe(room));
        }
        Bitset blocked(g.n());
        for (size_t ci = 0; ci < comps.size(); ++ci) {
            Tree sub = t.induced(comps[ci]);
            std::vector<int> map;
            PlacementOptions po;
            po.budget = p.placement_budget;
            po.seed = derive_seed(seed, 10 + ci);
            if (ci == 0) {
                AlmostSpanningOptions ao;
                ao.enforce_capacity = false;
                ao.placement = po;
                map = embed_almost_spanning(g, w, sub, std::max(d1, 1e-9), ao).map;
            } else {
                int root = 0;
                for (int v = 1; v < sub.n(); ++v)
                    if (sub.degree(v) > sub.degree(root)) root = v;
                auto pr = place_tree(g, sub, root, -1, w.bits(), blocked, po);
                if (pr.map.empty()) throw EmbeddingFailed("component " + std::to_string(ci) + " did not fit");
                map = pr.map;
            }
            for (int v = 0; v < sub.n(); ++v) {
                phi[sub.label(v)] = map[v];
                blocked.set(map[v]);
            }
        }
        end(std::to_string(comps.size()) + " component(s), " + std::to_string(total) +
            " vertices into " + std::to_string(w.size()));
    }

    // Every unmapped neighbour of each center goes to a distinct unused host
    // vertex adjacent to the center's image; expected gives d_T(v) - f(v).
    void attach_leaves(const std::vector<int>& centers, int expected_mapped) {
        begin(phase_name_final());
        VertexSet rest = unused();
        std::vector<int> f(g.n(), 0);
        std::vector<int> imgs;
        int total = 0;
        for (int c : centers) {
            if (phi[c] < 0) throw std::logic_error("center without image");
            int mapped = 0, want = 0;
            for (int u : t.adj(c)) (phi[u] >= 0 ? mapped : want)++;
            if (mapped != expected_mapped)
                throw ArithmeticMismatch("center " + std::to_string(c) + " has " +
                                         std::to_string(mapped) + " placed neighbours, expected " +
                                         std::to_string(expected_mapped));
            f[phi[c]] = want;
            total += want;
            imgs.push_back(phi[c]);
        }
        if (total != rest.size())
            throw ArithmeticMismatch("leaf demand " + std::to_string(total) + " != leftover " +
                                     std::to_string(rest.size()));
        auto fm = f_matching(g, StarDemand{VertexSet(g.n(), imgs), rest, f});
        if (!fm.ok())
            throw SearchExhausted("Hall violated on " + std::to_string(fm.error().x.size()) +
                                  " centers: |N|=" + std::to_string(fm.error().neighborhood) +
                                  " < demand " + std::to_string(fm.error().demand));
        for (int c : centers) {
            const auto* leaves = fm.value().leaves_of(phi[c]);
            size_t i = 0;
            for (int u : t.adj(c))
                if (phi[u] < 0) phi[u] = (*leaves)[i++];
        }
        end(std::to_string(total) + " leaves on " + std::to_string(centers.size()) + " centers");
    }

    std::string final_phase = "Phase3";
    std::string phase_name_final() const { return final_phase; }

    // Exact-length cover; the absorbing route when the instance is large
    // enough for it, the direct search otherwise or when it fails.
    std::vector<std::vector<int>> cover(const VertexSet& w,
                                        const std::vector<std::pair<int, int>>& pairs, int ell,
                                        std::string& route) {
        int P = static_cast<int>(pairs.size());
        PathCoverOptions po;
        po.seed = derive_seed(seed, 40);
        po.m = 1;
        bool fits = false;
        if (ell >= 4 && P >= 4) {
            int r = std::max(1, P / static_cast<int>(po.r_divisor));
            int s = std::max(1, static_cast<int>(std::ceil((1 + po.c) * r / (ell - 2) - 1e-9)));
            fits = 3 * r + s <= P && w.size() >= 4 * r;
        }
        if (fits) {
            try {
                auto pc = path_cover(g, w, pairs, ell, po);
                route = "absorbing/" + pc.completion_route;
                return pc.paths;
            } catch (const Error& e) {
                res.warnings.push_back(std::string("absorbing cover failed, direct route: ") + e.what());
            }
        }
        route = "direct";
        return path_cover_direct(g, w, pairs, ell, 400000, 8, derive_seed(seed, 41));
    }

    void splice_paths(const std::vector<std::vector<int>>& tree_paths,
                      const std::vector<std::vector<int>>& host_paths) {
        for (size_t i = 0; i < tree_paths.size(); ++i)
            for (size_t j = 0; j < tree_paths[i].size(); ++j) {
                int v = tree_paths[i][j];
                if (phi[v] >= 0 && phi[v] != host_paths[i][j])
                    throw std::logic_error("cover endpoint moved");
                phi[v] = host_paths[i][j];
            }
    }

    // Greedy maximal matching from the images of anchors into part; the
    // matched partner becomes the image of partner_of[anchor].
    GreedyStarResult match_into(const std::vector<int>& anchors, const std::vector<int>& partners,
                                const VertexSet& part) {
        std::vector<int> imgs;
        std::vector<int> f(g.n(), 0);
        for (int a : anchors) {
            imgs.push_back(phi[a]);
            f[phi[a]] = 1;
        }
        auto gr = maximal_star_matching_greedy(g, VertexSet(g.n(), imgs), part, f,
                                               derive_seed(seed, 20), p.m());
        std::map<int, int> by_img;
        for (size_t i = 0; i < anchors.size(); ++i) by_img[phi[anchors[i]]] = static_cast<int>(i);
        for (const auto& [c, leaves] : gr.matching.stars)
            if (!leaves.empty()) phi[partners[by_img[c]]] = leaves[0];
        if (!gr.joined_bound_ok)
            res.warnings.push_back("leftover of the maximal matching is not below m");
        return gr;
    }

    std::vector<char> barrier_of(const std::vector<std::vector<int>>& paths) const {
        std::vector<char> b(t.n(), 0);
        for (const auto& pth : paths)
            for (int v : pth) b[v] = 1;
        return b;
    }

    void regrow(std::vector<RegrowSegment> segs, const std::vector<char>& barrier,
                const VertexSet& window, int s, uint64_t salt, const std::string& label) {
        if (segs.empty()) return;
        TreeArray arr = build_regrow_array(g, t, phi, segs, barrier, window, s,
                                           std::max(2, t.max_degree()), derive_seed(seed, salt));
        auto chk = verify_tree_array(g, arr, window, arr.pairs, s, std::max(2, t.max_degree()), true);
        if (!chk.ok) throw std::logic_error(label + " array invalid: " + chk.violation);
        phi = prune_and_regrow(t, phi, segs, arr, barrier);
    }

    std::vector<int> shuffled(std::vector<int> v, uint64_t salt) const {
        Rng rng(derive_seed(seed, salt));
        shuffle_in_place(v, rng);
        return v;
    }

    // -- cases ---------------------------------------------------------------

    void many_leaves() {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin("Phase2");
        int h = plan.h;
        std::vector<int> a2, bs;
        for (const auto& ch : plan.chains) {
            a2.push_back(ch[h - 2]);
            bs.push_back(ch[h - 1]);
        }
        auto gr = match_into(a2, bs, pp.parts[1]);
        std::vector<RegrowSegment> segs;
        std::vector<std::vector<int>> paths;
        auto spare = shuffled(gr.uncovered_b, 21);
        size_t next = 0;
        for (size_t i = 0; i < plan.chains.size(); ++i) {
            if (phi[bs[i]] >= 0) continue;
            if (h < 3) throw SearchExhausted("unmatched vertex with nothing to regrow (h < 3)");
            RegrowSegment sg;
            sg.tree_path = plan.chains[i];
            sg.start_image = phi[sg.tree_path.front()];
            sg.end_image = spare.at(next++);
            paths.push_back(sg.tree_path);
            segs.push_back(std::move(sg));
        }
        regrow(segs, barrier_of(paths), pp.parts[2], h - 1, 22, "regrow");
        end(std::to_string(a2.size() - segs.size()) + " matched, " + std::to_string(segs.size()) +
            " regrown");
        final_phase = "Phase3";
        attach_leaves(plan.centers, 1);
    }

    void bare_paths(const std::string& phase_name) {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin(phase_name);
        std::vector<std::pair<int, int>> pairs;
        for (const auto& q : plan.chains) pairs.emplace_back(phi[q.front()], phi[q.back()]);
        std::string route;
        auto paths = cover(unused(), pairs, plan.path_vertices, route);
        splice_paths(plan.chains, paths);
        end(std::to_string(pairs.size()) + " paths of " + std::to_string(plan.path_vertices) +
            " vertices, route " + route);
    }

    void case_b() {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin("Phase2");
        std::vector<int> a0, a1;
        for (const auto& q : plan.chains) {
            a0.push_back(q[0]);
            a1.push_back(q[1]);
        }
        auto gr = match_into(a0, a1, pp.parts[1]);
        auto spare = shuffled(gr.uncovered_b, 21);
        size_t next = 0;
        std::vector<RegrowSegment> segs;
        std::vector<std::vector<int>> paths;
        for (size_t i = 0; i < plan.chains.size(); ++i) {
            if (phi[a1[i]] >= 0) continue;
            RegrowSegment sg;
            sg.tree_path = plan.outward[i];
            sg.tree_path.push_back(a1[i]);
            sg.start_image = phi[sg.tree_path.front()];
            sg.end_image = spare.at(next++);
            paths.push_back(sg.tree_path);
            segs.push_back(std::move(sg));
        }
        auto barrier = barrier_of(paths);
        for (const auto& q : plan.chains)
            for (int v : q) barrier[v] = 1;
        regrow(segs, barrier, pp.parts[2], plan.h, 22, "regrow");
        end(std::to_string(a0.size() - segs.size()) + " matched, " + std::to_string(segs.size()) +
            " regrown");
        begin("Phase3");
        std::vector<std::pair<int, int>> pairs;
        std::vector<std::vector<int>> tails;
        for (const auto& q : plan.chains) {
            tails.emplace_back(q.begin() + 1, q.end());
            pairs.emplace_back(phi[q[1]], phi[q.back()]);
        }
        std::string route;
        auto hp = cover(pp.parts[3], pairs, plan.path_vertices, route);
        splice_paths(tails, hp);
        end(std::to_string(pairs.size()) + " paths, route " + route);
        final_phase = "Phase4";
        attach_leaves(plan.centers, 2);
    }

    void case_c() {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin("Phase2");
        std::vector<int> roots, centers;
        for (const auto& ch : plan.chains) {
            roots.push_back(ch[ch.size() - 2]);
            centers.push_back(ch.back());
        }
        auto gr = match_into(roots, centers, pp.parts[1]);
        auto spare = shuffled(gr.uncovered_b, 21);
        size_t next = 0;
        std::vector<RegrowSegment> first, second;
        std::vector<std::vector<int>> paths;
        for (size_t i = 0; i < plan.chains.size(); ++i) {
            if (phi[centers[i]] >= 0) continue;
            RegrowSegment a;
            a.tree_path = plan.chains[i];
            a.start_image = phi[a.tree_path.front()];
            a.end_image = spare.at(next++);
            RegrowSegment b;
            b.tree_path = plan.second[i];
            paths.push_back(a.tree_path);
            paths.push_back(b.tree_path);
            first.push_back(std::move(a));
            second.push_back(std::move(b));
        }
        auto barrier = barrier_of(paths);
        regrow(first, barrier, pp.parts[3], plan.h, 22, "first");
        for (auto& b : second) {
            b.start_image = phi[b.tree_path.front()];
            b.end_image = phi[b.tree_path.back()];
        }
        // the old images of the second segments are dropped by the regrow itself
        regrow(second, barrier, pp.parts[4], plan.h, 23, "second");
        end(std::to_string(roots.size() - first.size()) + " matched, " +
            std::to_string(first.size()) + " rebuilt twice");
        final_phase = "Phase3";
        attach_leaves(plan.centers, 1);
    }

    void th2_pendant() {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin("Phase2");
        std::vector<int> imgs;
        std::vector<int> f(g.n(), 0);
        std::map<int, std::vector<int>> centers_of;
        for (const auto& s : plan.stars) centers_of[s.root].push_back(s.center);
        for (int r : plan.roots) {
            imgs.push_back(phi[r]);
            f[phi[r]] = plan.star_count[r];
        }
        std::map<int, int> root_of_img;
        for (int r : plan.roots) root_of_img[phi[r]] = r;
        auto gr = maximal_star_matching_greedy(g, VertexSet(g.n(), imgs), pp.parts[1], f,
                                               derive_seed(seed, 20), p.m());
        auto place = [&](int img, const std::vector<int>& leaves) {
            const auto& cs = centers_of[root_of_img[img]];
            for (size_t i = 0; i < cs.size(); ++i) phi[cs[i]] = leaves[i];
        };
        for (const auto& [c, leaves] : gr.matching.stars)
            if (!leaves.empty()) place(c, leaves);
        int a2 = static_cast<int>(gr.uncovered_a.size());
        if (a2 >= p.m()) res.warnings.push_back("claim bound |A_2| < m fails: |A_2| = " + std::to_string(a2));
        if (a2 > 0) {
            int64_t val = 0;
            auto m2 = star_matching_flow(g, VertexSet(g.n(), gr.uncovered_a), pp.parts[2], f, &val);
            int64_t need = 0;
            for (int v : gr.uncovered_a) need += f[v];
            if (val != need)
                throw SearchExhausted("overflow star matching short by " + std::to_string(need - val));
            for (const auto& [c, leaves] : m2.stars) place(c, leaves);
        }
        end(std::to_string(imgs.size() - a2) + " roots matched in V2, " + std::to_string(a2) +
            " overflow into V3");
        final_phase = "Phase3";
        attach_leaves(plan.centers, 1);
    }

    void th2_leggy() {
        auto pp = partition();
        embed_rest(pp.parts[0]);
        begin("Phase2");
        std::vector<int> a0, a1;
        for (const auto& q : plan.chains) {
            a0.push_back(q[0]);
            a1.push_back(q[1]);
        }
        auto gr = match_into(a0, a1, pp.parts[1]);
        std::vector<int> rest;
        for (size_t i = 0; i < a0.size(); ++i)
            if (phi[a1[i]] < 0) rest.push_back(i);
        Bitset window = pp.parts[2].bits();
        if (!rest.empty()) {
            std::vector<int> imgs, f(g.n(), 0);
            for (int i : rest) {
                imgs.push_back(phi[a0[i]]);
                f[phi[a0[i]]] = 1;
            }
            int64_t val = 0;
            auto m2 = star_matching_flow(g, VertexSet(g.n(), imgs), pp.parts[2], f, &val);
            if (val != static_cast<int64_t>(rest.size()))
                throw SearchExhausted("overflow matching into V3 short by " +
                                      std::to_string(rest.size() - val));
            for (int i : rest) {
                int b = m2.leaves_of(phi[a0[i]])->front();
                phi[a1[i]] = b;
                window.reset(b);
            }
        }
        // swap: unused V2 vertices join the cover window
        for (int v : gr.uncovered_b) window.set(v);
        end(std::to_string(a0.size() - rest.size()) + " matched, " + std::to_string(rest.size()) +
            " swapped");
        begin("Phase3");
        std::vector<std::pair<int, int>> pairs;
        std::vector<std::vector<int>> tails;
        for (const auto& q : plan.chains) {
            tails.emplace_back(q.begin() + 1, q.end());
            pairs.emplace_back(phi[q[1]], phi[q.back()]);
        }
        std::string route;
        auto hp = cover(VertexSet(window), pairs, plan.path_vertices, route);
        splice_paths(tails, hp);
        end(std::to_string(pairs.size()) + " paths, route " + route);
        final_phase = "Phase4";
        attach_leaves(plan.centers, 2);
    }

    void run() {
        switch (plan.tag) {
            case CaseTag::ManyLeaves: many_leaves(); break;
            case CaseTag::CaseA: bare_paths("Phase2"); break;
            case CaseTag::CaseB: case_b(); break;
            case CaseTag::CaseC: case_c(); break;
            case CaseTag::Th2Pendant: th2_pendant(); break;
            case CaseTag::Th2Caterpillar:
                if (plan.bare)
                    bare_paths("Phase2");
                else
                    th2_leggy();
                break;
        }
    }
};

}  // namespace detail

inline PipelineResult embed_spanning_tree(const Graph& g, const Tree& t, const PipelineParams& params,
                                          uint64_t seed) {
    if (t.n() != g.n())
        throw InvalidParameter("tree order " + std::to_string(t.n()) + " differs from host order " +
                               std::to_string(g.n()));
    PipelineParams p = params;
    p.n = g.n();
    p.delta = std::max(2, t.max_degree());
    if (p.strict) {
        if (auto q = strict_refusal(p))
            throw PreconditionViolated("strict mode refuses: " + describe(*q));
    }
    PipelineResult res;
    std::string last_stage = "Plan";
    std::string last_what;
    for (int a = 0; a < std::max(1, p.attempts); ++a) {
        ++res.attempts;
        uint64_t s = derive_seed(seed, a);
        EmbeddingPlan plan;
        try {
            plan = plan_embedding(t, p, derive_seed(s, 0));
        } catch (const Error& e) {
            throw StageFailure("Plan", e.what());
        }
        PipelineResult attempt;
        detail::PipelineRun run(g, t, p, plan, s, attempt);
        try {
            run.run();
            Embedding e{run.phi};
            auto chk = verify_embedding(g, t, e, true);
            if (!chk.ok) throw std::logic_error("verification failed: " + chk.violation);
            attempt.embedding = std::move(e);
            attempt.plan = std::move(plan);
            attempt.verified = true;
            attempt.attempts = res.attempts;
            attempt.failures = std::move(res.failures);
            return attempt;
        } catch (const Error& e) {
            last_stage = std::string(case_name(plan.tag)) + "/" + run.phase;
            last_what = e.what();
            res.failures.push_back(last_stage + ": " + last_what);
        }
    }
    throw StageFailure(last_stage, "no embedding after " + std::to_string(res.attempts) +
                                       " attempts; last: " + last_what);
}

// Largest d = n/(2t) whose expander claim survives the sampled falsifier.
inline double desk_expansion_degree(const Graph& g, int trials, uint64_t seed) {
    int n = g.n();
    VertexSet all = VertexSet::all(n);
    for (int t = 1; 2 * t <= n; ++t) {
        double d = n / (2.0 * t);
        if (sampled_certificate(g, all, d, trials, derive_seed(seed, t)).ok()) return d;
    }
    return 0.5;
}

}  // namespace spanex
