#pragma once

#include <stdexcept>
#include <string>
#include <cstdint>

namespace biortho {

struct NotPositiveDefinite : std::runtime_error {
    std::int64_t pivot_index;
    explicit NotPositiveDefinite(std::int64_t idx)
        : std::runtime_error("LDL^H pivot <= 0 at index " + std::to_string(idx) +
                             " (precision too low or degenerate sequence)"),
          pivot_index(idx) {}
};

struct NonFinite : std::runtime_error {
    explicit NonFinite(const std::string& what) : std::runtime_error("non-finite value: " + what) {}
};

struct PrefixExhausted : std::runtime_error {
    explicit PrefixExhausted(const std::string& what) : std::runtime_error("sequence prefix exhausted: " + what) {}
};

struct DegenerateSequence : std::runtime_error {
    std::int64_t k, n;
    DegenerateSequence(std::int64_t k_, std::int64_t n_)
        : std::runtime_error("coincident sequence terms at indices " + std::to_string(k_) + ", " + std::to_string(n_)),
          k(k_), n(n_) {}
};

struct DuplicateTerm : std::runtime_error {
    explicit DuplicateTerm(const std::string& what) : std::runtime_error("duplicate term in merge: " + what) {}
};

struct InvalidShift : std::runtime_error {
    explicit InvalidShift(double omega)
        : std::runtime_error("quadratic shift omega = " + std::to_string(omega) + " must exceed -1") {}
};

struct RationalRootCollision : std::runtime_error {
    std::int64_t k, n;
    RationalRootCollision(std::int64_t k_, std::int64_t n_)
        : std::runtime_error("k^2 = d n^2 collision at k=" + std::to_string(k_) + ", n=" + std::to_string(n_)),
          k(k_), n(n_) {}
};

struct H2Violation : std::runtime_error {
    std::int64_t k, l;
    H2Violation(std::int64_t k_, std::int64_t l_)
        : std::runtime_error("phase-field H2 condition violated at (k,l)=(" + std::to_string(k_) + "," +
                             std::to_string(l_) + ")"),
          k(k_), l(l_) {}
};

struct ZeroDenominator : std::runtime_error {
    ZeroDenominator() : std::runtime_error("Lambda_k + conj(Lambda_n) = 0 in Gram entry") {}
};

struct TailNotSummable : std::runtime_error {
    explicit TailNotSummable(const std::string& what) : std::runtime_error("product tail bound unreachable: " + what) {}
};

struct DegenerateNormalizer : std::runtime_error {
    explicit DegenerateNormalizer(const std::string& what)
        : std::runtime_error("normalizer underflow: " + what) {}
};

struct WindowTooSmall : std::runtime_error {
    explicit WindowTooSmall(const std::string& what) : std::runtime_error("synthesis window: " + what) {}
};

struct NoPlateau : std::runtime_error {
    std::int64_t m_max;
    explicit NoPlateau(std::int64_t m)
        : std::runtime_error("no truncation plateau reached by M = " + std::to_string(m)), m_max(m) {}
};

struct DegenerateWindow : std::runtime_error {
    explicit DegenerateWindow(const std::string& what) : std::runtime_error("degenerate window: " + what) {}
};

struct ZeroPerturbation : std::runtime_error {
    std::int64_t k;
    explicit ZeroPerturbation(std::int64_t k_)
        : std::runtime_error("epsilon_k = 0 at k = " + std::to_string(k_) + " (spectrum collision)"), k(k_) {}
};

struct ZeroControlVector : std::runtime_error {
    ZeroControlVector() : std::runtime_error("control vector component b_i = 0: system not approximately controllable") {}
};

struct PowerIterationStall : std::runtime_error {
    explicit PowerIterationStall(const std::string& what) : std::runtime_error("power iteration stalled: " + what) {}
};

struct GridInfeasible : std::runtime_error {
    explicit GridInfeasible(const std::string& what) : std::runtime_error("grid infeasible: " + what) {}
};

struct InfeasibleFit : std::runtime_error {
    explicit InfeasibleFit(const std::string& what) : std::runtime_error("infeasible fit: " + what) {}
};

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& what) : std::runtime_error("invalid config: " + what) {}
};

struct ComputeFailed : std::runtime_error {
    explicit ComputeFailed(const std::string& what) : std::runtime_error(what) {}
};

} // namespace biortho
