#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace spanex {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define SPANEX_ERROR(Name)                                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what) {}       \
    };

SPANEX_ERROR(SizeLimitExceeded)
SPANEX_ERROR(InvalidParameter)
SPANEX_ERROR(NotRegular)
SPANEX_ERROR(ConvergenceFailure)
SPANEX_ERROR(DemandMismatch)
SPANEX_ERROR(PreconditionViolated)
SPANEX_ERROR(SearchExhausted)
SPANEX_ERROR(CapacityExceeded)
SPANEX_ERROR(EmbeddingFailed)
SPANEX_ERROR(ShapeMismatch)
SPANEX_ERROR(ArithmeticMismatch)
SPANEX_ERROR(RetriesExhausted)
SPANEX_ERROR(InvalidSpec)
SPANEX_ERROR(RejectionBudgetExceeded)
SPANEX_ERROR(ConstructionFailed)
SPANEX_ERROR(InsufficientNeighborhood)
SPANEX_ERROR(ParseError)

#undef SPANEX_ERROR

// Failure of one stage of a multi-stage routine; keeps the stage name so
// callers can report where a run stopped.
class StageFailure : public Error {
public:
    StageFailure(std::string stage, const std::string& what)
        : Error("StageFailure", stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Either a value or a rejection record.
template <class T, class E>
class Result {
public:
    Result(T v) : v_(std::move(v)) {}
    Result(E e) : v_(std::move(e)) {}
    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }
    const T& value() const { return std::get<0>(v_); }
    T& value() { return std::get<0>(v_); }
    const E& error() const { return std::get<1>(v_); }

private:
    std::variant<T, E> v_;
};

using Rng = std::mt19937_64;

// Portable bounded draw; std distributions differ between standard libraries.
inline uint64_t uniform_below(Rng& rng, uint64_t bound) {
    if (bound <= 1) return 0;
    uint64_t limit = std::numeric_limits<uint64_t>::max() -
                     std::numeric_limits<uint64_t>::max() % bound;
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = uniform_below(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// C(n, k) saturating at max uint64.
inline uint64_t binomial(uint64_t n, uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<uint64_t>::max())
            return std::numeric_limits<uint64_t>::max();
    }
    return static_cast<uint64_t>(r);
}

inline uint64_t saturating_add(uint64_t a, uint64_t b) {
    return a > std::numeric_limits<uint64_t>::max() - b
               ? std::numeric_limits<uint64_t>::max()
               : a + b;
}

// Advance idx (sorted, values < n) to the next k-combination in
// lexicographic order; false when exhausted.
inline bool next_combination(std::vector<int>& idx, int n) {
    int k = static_cast<int>(idx.size());
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    return true;
}

inline double log_base(double x, double base) {
    return std::log(x) / std::log(base);
}

constexpr uint64_t kDefaultExhaustiveBudget = uint64_t{1} << 26;

}  // namespace spanex
