#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spanex/common.hpp"
#include "spanex/graph.hpp"

namespace spanex {

struct SpectralProfile {
    double top_eigenvalue = 0;
    double lambda = 0;
    bool is_regular = false;
    int degree = -1;
    std::vector<double> spectrum;  // ascending; empty on the iterative path
};

struct SpectralOptions {
    int dense_limit = 4000;
    int max_iterations = 20000;
    double tolerance = 1e-10;
    uint64_t seed = 1;
};

namespace detail {

inline std::vector<double> apply_adjacency(const Graph& g, const std::vector<double>& x) {
    std::vector<double> y(g.n(), 0.0);
    for (int v = 0; v < g.n(); ++v) {
        double s = 0;
        for (int u : g.adj(v)) s += x[u];
        y[v] = s;
    }
    return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double normalize(std::vector<double>& a) {
    double nrm = std::sqrt(dot(a, a));
    if (nrm > 0)
        for (double& x : a) x /= nrm;
    return nrm;
}

// Power iteration for the largest eigenpair of A + shift*I.
inline std::pair<double, std::vector<double>> top_pair(const Graph& g, double shift,
                                                       const SpectralOptions& opt, Rng& rng) {
    std::vector<double> x(g.n());
    for (double& v : x) v = 1.0 + uniform_unit(rng);
    normalize(x);
    double prev = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        auto y = apply_adjacency(g, x);
        for (int i = 0; i < g.n(); ++i) y[i] += shift * x[i];
        double ray = dot(x, y);
        normalize(y);
        x.swap(y);
        if (it > 10 && std::abs(ray - prev) < opt.tolerance * std::max(1.0, std::abs(ray)))
            return {ray - shift, x};
        prev = ray;
    }
    throw ConvergenceFailure("top eigenpair did not converge in " +
                             std::to_string(opt.max_iterations) + " iterations");
}

// Largest eigenvalue of A^2 on the complement of v1.
inline double deflated_square_top(const Graph& g, const std::vector<double>& v1,
                                  const SpectralOptions& opt, Rng& rng) {
    std::vector<double> x(g.n());
    for (double& v : x) v = uniform_unit(rng) - 0.5;
    auto project = [&](std::vector<double>& a) {
        double c = dot(a, v1);
        for (int i = 0; i < g.n(); ++i) a[i] -= c * v1[i];
    };
    project(x);
    normalize(x);
    double prev = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        auto y = apply_adjacency(g, apply_adjacency(g, x));
        project(y);
        double ray = dot(x, y);
        if (normalize(y) == 0) return 0;
        x.swap(y);
        if (it > 10 && std::abs(ray - prev) < opt.tolerance * std::max(1.0, std::abs(ray)))
            return ray;
        prev = ray;
    }
    throw ConvergenceFailure("deflated iteration did not converge in " +
                             std::to_string(opt.max_iterations) + " iterations");
}

}  // namespace detail

inline SpectralProfile second_eigenvalue(const Graph& g, const SpectralOptions& opt = {}) {
    int n = g.n();
    if (n < 2) throw InvalidParameter("second eigenvalue needs n >= 2");
    SpectralProfile p;
    p.is_regular = g.is_regular();
    if (p.is_regular) p.degree = g.degree(0);
    if (n <= opt.dense_limit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int v = 0; v < n; ++v)
            for (int u : g.adj(v)) a(v, u) = 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw ConvergenceFailure("dense eigensolver failed");
        const auto& ev = es.eigenvalues();
        p.spectrum.assign(ev.data(), ev.data() + n);
        p.top_eigenvalue = p.spectrum.back();
        for (int i = 0; i + 1 < n; ++i) p.lambda = std::max(p.lambda, std::abs(p.spectrum[i]));
        return p;
    }
    Rng rng(opt.seed);
    double shift = 0;
    for (int v = 0; v < n; ++v) shift = std::max<double>(shift, g.degree(v));
    auto [top, vec] = detail::top_pair(g, shift + 1, opt, rng);
    p.top_eigenvalue = top;
    p.lambda = std::sqrt(std::max(0.0, detail::deflated_square_top(g, vec, opt, rng)));
    return p;
}

struct Rejection {
    std::string reason;
};

// Numerical slack applied against the claim.
constexpr double kSpectralSlack = 1e-9;

struct ExpanderCertificate {
    enum class Kind { Exact, EigenvalueRoute, BijumbledRoute, SampledOnly };
    enum class Claim { Expander, ExpandsInto, Joined };

    Kind kind = Kind::Exact;
    Claim claim = Claim::Expander;
    int n = 0;
    double d1 = 0;
    int m = 0;  // 0 when no joinedness is part of the claim
    double lambda = -1, p = -1, beta = -1;
    int window_lo = 0, window_hi = 0;  // subset sizes actually examined
    int window_size = 0;               // |W| for ExpandsInto
    uint64_t seed = 0;

    bool is_proof() const { return kind != Kind::SampledOnly; }

    static const char* kind_name(Kind k) {
        switch (k) {
            case Kind::Exact: return "exact";
            case Kind::EigenvalueRoute: return "eigenvalue-route";
            case Kind::BijumbledRoute: return "bijumbled-route";
            case Kind::SampledOnly: return "sampled-only";
        }
        return "?";
    }
    static const char* claim_name(Claim c) {
        switch (c) {
            case Claim::Expander: return "expander";
            case Claim::ExpandsInto: return "expands-into";
            case Claim::Joined: return "joined";
        }
        return "?";
    }

    // Canonical record, one key per line in fixed order.
    std::string to_text() const {
        char buf[64];
        std::ostringstream os;
        auto num = [&](double x) {
            std::snprintf(buf, sizeof buf, "%.12g", x);
            return std::string(buf);
        };
        os << "kind=" << kind_name(kind) << '\n'
           << "claim=" << claim_name(claim) << '\n'
           << "n=" << n << '\n'
           << "d1=" << num(d1) << '\n'
           << "m=" << m << '\n'
           << "lambda=" << (lambda < 0 ? "-" : num(lambda)) << '\n'
           << "p=" << (p < 0 ? "-" : num(p)) << '\n'
           << "beta=" << (beta < 0 ? "-" : num(beta)) << '\n'
           << "window=" << window_lo << ".." << window_hi << '\n'
           << "window_size=" << window_size << '\n'
           << "proof=" << (is_proof() ? "yes" : "no") << '\n'
           << "seed=" << seed << '\n';
        return os.str();
    }
};

using CertResult = Result<ExpanderCertificate, Rejection>;

inline CertResult eigen_expander_certificate(const Graph& g, const SpectralProfile& sp) {
    if (!sp.is_regular) throw NotRegular("eigenvalue route needs a regular graph");
    double d = sp.degree;
    double lam = sp.lambda + kSpectralSlack;
    if (!(lam < d / 8)) {
        std::ostringstream os;
        os << "lambda < d/8 fails: lambda=" << sp.lambda << ", d/8=" << d / 8;
        return Rejection{os.str()};
    }
    ExpanderCertificate c;
    c.kind = ExpanderCertificate::Kind::EigenvalueRoute;
    c.claim = ExpanderCertificate::Claim::Expander;
    c.n = g.n();
    c.d1 = d / (2 * lam);
    c.m = static_cast<int>(std::ceil(lam * g.n() / d - kSpectralSlack));
    c.lambda = sp.lambda;
    c.window_lo = 1;
    c.window_hi = static_cast<int>(std::ceil(g.n() / (2 * c.d1)));
    return c;
}

inline CertResult eigen_expander_certificate(const Graph& g) {
    if (!g.is_regular()) throw NotRegular("eigenvalue route needs a regular graph");
    return eigen_expander_certificate(g, second_eigenvalue(g));
}

inline CertResult bijumbled_expander_certificate(int n, double p, double beta, double min_degree) {
    if (!(p > 0 && p <= 1)) throw InvalidParameter("p must lie in (0,1]");
    if (!(beta > 0)) throw InvalidParameter("beta must be positive");
    std::ostringstream os;
    if (beta > p * n / 400) {
        os << "beta <= pn/400 fails: beta=" << beta << ", pn/400=" << p * n / 400;
        return Rejection{os.str()};
    }
    double need = 4 * std::sqrt(p * beta * n);
    if (min_degree < need) {
        os << "min degree >= 4*sqrt(p*beta*n) fails: " << min_degree << " < " << need;
        return Rejection{os.str()};
    }
    ExpanderCertificate c;
    c.kind = ExpanderCertificate::Kind::BijumbledRoute;
    c.claim = ExpanderCertificate::Claim::Expander;
    c.n = n;
    c.p = p;
    c.beta = beta;
    c.d1 = p * n / (4 * beta);
    return c;
}

using MJoinedResult = Result<int, Rejection>;

inline MJoinedResult m_joined_spectral(const Graph& g, const SpectralProfile& sp) {
    if (!sp.is_regular) throw NotRegular("spectral joinedness needs a regular graph");
    if (sp.degree <= 0) return Rejection{"degree 0: no joinedness"};
    double lam = sp.lambda + kSpectralSlack;
    int m = static_cast<int>(std::floor(lam * g.n() / sp.degree)) + 1;
    if (2 * m > g.n()) {
        std::ostringstream os;
        os << "m=" << m << " exceeds n/2=" << g.n() / 2.0 << " (vacuous)";
        return Rejection{os.str()};
    }
    return m;
}

inline MJoinedResult m_joined_spectral(const Graph& g) {
    if (!g.is_regular()) throw NotRegular("spectral joinedness needs a regular graph");
    return m_joined_spectral(g, second_eigenvalue(g));
}

struct ExpansionCheck {
    bool holds = true;
    std::vector<int> x, y;  // y non-empty for a joinedness violation
    std::string violation;
    int expansion_below = 0;  // sizes 1..expansion_below-1 examined
    int joined_size = 0;      // 0 when vacuous
};

namespace detail {

inline int ceil_tol(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

// Sizes j with 1 <= j < max_exclusive get |N(X) ∩ W| >= d|X|; pairs of
// size t must span an edge.
inline ExpansionCheck exhaustive_expansion(const Graph& g, const Bitset& w, double d,
                                           int max_exclusive, int t, uint64_t budget) {
    int n = g.n();
    ExpansionCheck out;
    out.expansion_below = std::min(max_exclusive, n + 1);
    out.joined_size = (t >= 1 && 2 * t <= n) ? t : 0;
    uint64_t cost = 0;
    for (int j = 1; j < out.expansion_below; ++j) cost = saturating_add(cost, binomial(n, j));
    if (out.joined_size) cost = saturating_add(cost, binomial(n, t));
    if (cost > budget)
        throw SizeLimitExceeded("expansion check needs " + std::to_string(cost) +
                                " subset evaluations, budget " + std::to_string(budget));
    for (int j = 1; j < out.expansion_below; ++j) {
        std::vector<int> idx(j);
        for (int i = 0; i < j; ++i) idx[i] = i;
        do {
            Bitset xs(n);
            for (int v : idx) xs.set(v);
            Bitset nb = external_neighborhood(g, xs);
            int got = nb.and_count(w);
            if (got < d * j - 1e-9) {
                out.holds = false;
                out.x = idx;
                std::ostringstream os;
                os << "|N(X,W)|=" << got << " < d|X|=" << d * j;
                out.violation = os.str();
                return out;
            }
        } while (next_combination(idx, n));
    }
    if (out.joined_size) {
        auto jc = find_unjoined_pair(g, t, budget);
        if (!jc.joined) {
            out.holds = false;
            out.x = jc.x;
            out.y = jc.y;
            out.violation = "disjoint sets of size " + std::to_string(t) + " span no edge";
        }
    }
    return out;
}

}  // namespace detail

inline ExpansionCheck check_expands_into_exact(const Graph& g, const VertexSet& w, double d,
                                               uint64_t budget = kDefaultExhaustiveBudget) {
    if (!(d > 0)) throw InvalidParameter("d must be positive");
    int t = detail::ceil_tol(w.size() / (2 * d));
    return detail::exhaustive_expansion(g, w.bits(), d, t, t, budget);
}

inline ExpansionCheck check_expander_exact(const Graph& g, double d,
                                           uint64_t budget = kDefaultExhaustiveBudget) {
    if (!(d > 0)) throw InvalidParameter("d must be positive");
    // j < n/2d is the same as j < ceil(n/2d)
    int t = detail::ceil_tol(g.n() / (2 * d));
    return detail::exhaustive_expansion(g, VertexSet::all(g.n()).bits(), d, t, t, budget);
}

inline ExpanderCertificate exact_certificate(const Graph& g, double d,
                                             const ExpansionCheck& chk) {
    ExpanderCertificate c;
    c.kind = ExpanderCertificate::Kind::Exact;
    c.claim = ExpanderCertificate::Claim::Expander;
    c.n = g.n();
    c.d1 = d;
    c.m = chk.joined_size;
    c.window_lo = 1;
    c.window_hi = std::max(chk.expansion_below - 1, chk.joined_size);
    return c;
}

struct SampledCheck {
    bool violation_found = false;
    std::vector<int> x, y;
    std::string violation;
    int trials_run = 0;
};

namespace detail {

// Random set of the given size, grown mostly along edges.
inline std::vector<int> connected_biased_set(const Graph& g, int size, Rng& rng) {
    int n = g.n();
    Bitset in(n);
    std::vector<int> members;
    members.reserve(size);
    auto add = [&](int v) {
        if (!in.test(v)) {
            in.set(v);
            members.push_back(v);
        }
    };
    add(static_cast<int>(uniform_below(rng, n)));
    int guard = 0;
    while (static_cast<int>(members.size()) < size && guard++ < 50 * size + 100) {
        if (uniform_below(rng, 4) != 0) {
            int base = members[uniform_below(rng, members.size())];
            const auto& a = g.adj(base);
            if (!a.empty()) {
                add(a[uniform_below(rng, a.size())]);
                continue;
            }
        }
        add(static_cast<int>(uniform_below(rng, n)));
    }
    for (int v = 0; static_cast<int>(members.size()) < size && v < n; ++v) add(v);
    std::sort(members.begin(), members.end());
    return members;
}

}  // namespace detail

// Randomized refuter for d-expansion into w; never a proof.
inline SampledCheck falsify_expansion_sampled(const Graph& g, const VertexSet& w, double d,
                                              int trials, uint64_t seed) {
    if (trials < 1) throw InvalidParameter("trials must be >= 1");
    SampledCheck out;
    int n = g.n();
    int t = detail::ceil_tol(w.size() / (2 * d));
    const Bitset& wb = w.bits();
    auto report = [&](std::vector<int> x, int got, int size) {
        out.violation_found = true;
        out.x = std::move(x);
        std::ostringstream os;
        os << "|N(X,W)|=" << got << " < d|X|=" << d * size;
        out.violation = os.str();
    };
    if (t > 1) {
        for (int v = 0; v < n; ++v) {
            Bitset xs(n);
            xs.set(v);
            int got = external_neighborhood(g, xs).and_count(wb);
            if (got < d - 1e-9) {
                report({v}, got, 1);
                return out;
            }
        }
    }
    Rng rng(seed);
    bool joined_check = t >= 1 && 2 * t <= n;
    for (int trial = 0; trial < trials; ++trial) {
        ++out.trials_run;
        int span = std::max(1, t - 1);
        int size = t > 1 ? 1 + static_cast<int>(uniform_below(rng, span)) : 0;
        if (size > 1) {
            auto xs = detail::connected_biased_set(g, size, rng);
            Bitset xb(n);
            for (int v : xs) xb.set(v);
            int got = external_neighborhood(g, xb).and_count(wb);
            if (got < d * size - 1e-9) {
                report(xs, got, size);
                return out;
            }
        }
        if (joined_check) {
            auto xs = detail::connected_biased_set(g, t, rng);
            Bitset xb(n);
            for (int v : xs) xb.set(v);
            Bitset closed = external_neighborhood(g, xb);
            closed |= xb;
            if (n - closed.count() >= t) {
                out.violation_found = true;
                out.x = xs;
                for (int v = 0; v < n && static_cast<int>(out.y.size()) < t; ++v)
                    if (!closed.test(v)) out.y.push_back(v);
                out.violation = "disjoint sets of size " + std::to_string(t) + " span no edge";
                return out;
            }
        }
    }
    return out;
}

inline CertResult sampled_certificate(const Graph& g, const VertexSet& w, double d, int trials,
                                      uint64_t seed) {
    auto chk = falsify_expansion_sampled(g, w, d, trials, seed);
    if (chk.violation_found) return Rejection{chk.violation};
    ExpanderCertificate c;
    c.kind = ExpanderCertificate::Kind::SampledOnly;
    c.claim = ExpanderCertificate::Claim::ExpandsInto;
    c.n = g.n();
    c.d1 = d;
    c.window_size = w.size();
    int t = detail::ceil_tol(w.size() / (2 * d));
    c.m = (2 * t <= g.n()) ? t : 0;
    c.window_lo = 1;
    c.window_hi = t;
    c.seed = seed;
    return c;
}

inline double bijumbled_deviation(const Graph& g, double p, const VertexSet& x,
                                  const VertexSet& y) {
    if (x.empty() || y.empty()) return 0;
    double e = static_cast<double>(edge_count_between(g, x, y));
    double xy = static_cast<double>(x.size()) * y.size();
    return std::abs(e - p * xy) / std::sqrt(xy);
}

// Lower estimate of the smallest beta for which g is (p, beta)-bijumbled.
inline double bijumbled_deviation_sampled(const Graph& g, double p, int trials, uint64_t seed) {
    if (trials < 1) throw InvalidParameter("trials must be >= 1");
    int n = g.n();
    if (n == 0) return 0;
    Rng rng(seed);
    double best = 0;
    for (int trial = 0; trial < trials; ++trial) {
        auto pick = [&]() {
            int size = 1 + static_cast<int>(uniform_below(rng, n));
            std::vector<int> all(n);
            for (int i = 0; i < n; ++i) all[i] = i;
            shuffle_in_place(all, rng);
            all.resize(size);
            return VertexSet(n, all);
        };
        VertexSet x = pick();
        VertexSet y = pick();
        best = std::max(best, bijumbled_deviation(g, p, x, y));
    }
    return best;
}

}  // namespace spanex
