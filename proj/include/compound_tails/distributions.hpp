#ifndef COMPOUND_TAILS_DISTRIBUTIONS_HPP
#define COMPOUND_TAILS_DISTRIBUTIONS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compound_tails/numerics.hpp"

namespace ctails {

enum class CountFamily {
    degenerate,
    geometric,
    poisson,
    discretized_weibull,
    pareto,
    mixed_poisson_earthquake,
};

enum class SeverityFamily {
    exponential,
    bounded_atoms,
    pareto,
};

const char* to_string(CountFamily f);
const char* to_string(SeverityFamily f);

// Discrete claim-count law. All probabilities are carried in the log
// domain: tails to 1e-300 are in scope. tail(x) = P[N > x] is a
// right-continuous step function constant on [n, n+1).
struct CountModel {
    CountFamily family;
    std::vector<std::pair<std::string, double>> params;

    double mean = 0.0;          // may be +inf
    double eps_declared = 0.0;  // truncation/quadrature tolerance; 0 = closed form

    std::function<double(std::uint64_t)> log_pmf;
    std::function<double(double)> log_tail;  // log P[N > x], x >= 0

    // Analytic auxiliary function a(x) when the family carries one
    // (asymptotic mean excess); empty otherwise.
    std::function<double(double)> aux;

    // Exact regular-variation index of the tail when the family has one.
    std::optional<double> rv_index;

    double pmf(std::uint64_t n) const { return std::exp(log_pmf(n)); }
    double tail(double x) const { return std::exp(log_tail(x)); }
    bool has_aux() const { return static_cast<bool>(aux); }

    // Smallest n with tail(n) <= eps. Declared support truncation point;
    // downstream oracles fold the remainder into their brackets.
    std::uint64_t n_max(double eps) const;

    // Smallest n with P[N <= n] >= u, for u in [0, 1).
    std::uint64_t quantile(double u) const;
};

// Nonnegative claim-size law with finite mean.
struct SeverityModel {
    SeverityFamily family;
    std::vector<std::pair<std::string, double>> params;

    double mu = 0.0;
    double sigma2 = 0.0;      // +inf when the second moment diverges
    double mgf_radius = 0.0;  // sup{t : E[e^{tX}] < inf}; may be +inf

    std::function<double(double)> moment;    // r >= 1 -> E[X^r], +inf allowed
    std::function<double(double)> log_tail;  // log P[X > x]
    std::function<double(double)> log_mgf;   // defined for t < mgf_radius
    std::function<double(double)> cdf;       // P[X <= x]
    std::function<double(double)> quantile;  // u in [0, 1)

    // Nonempty for purely atomic laws, sorted by value.
    std::vector<std::pair<double, double>> atoms;

    double tail(double x) const { return std::exp(log_tail(x)); }
};

// Probability mass on the grid {(offset + k) * h : k = 0..size-1},
// stored as log-probabilities. Mass beyond the stored span (at most
// eps_lat by construction) is recoverable as 1 - exp-sum.
struct LatticePMF {
    double h = 0.0;
    std::uint64_t offset = 0;
    std::vector<double> log_mass;

    std::size_t size() const { return log_mass.size(); }
    double mass(std::size_t k) const { return std::exp(log_mass[k]); }

    // Mean of the stored mass (ignores the truncated remainder).
    double mean() const;
    // Total stored probability, summed smallest-first.
    double total_mass() const;
    // P[value > x] restricted to the stored span.
    double tail(double x) const;
};

enum class DiscretizeMode { floor, round, upper };

// --- claim-count constructors ------------------------------------------

// N = floor(Y), P[Y > y] = exp(-y^beta), 0 < beta < 1.
// tail(n) = exp(-(n+1)^beta) exactly; aux a(x) = x^(1-beta)/beta.
CountModel make_discretized_weibull(double beta);

// P[N >= n] = (c/(c+n))^gamma; regularly varying with index gamma.
CountModel make_pareto_count(double gamma, double c);

// Mixed Poisson: N | Lambda ~ Poisson(beta_rate * Lambda),
// P[Lambda > l] = (lambda_cut/l)^alpha for l >= lambda_cut (scale fixes
// the Pareto scale so that the energy law is scale*Pareto; tail index alpha).
CountModel make_mixed_poisson_earthquake(double alpha, double scale,
                                         double beta_rate, double lambda_cut);

CountModel make_geometric_count(double p);
CountModel make_poisson_count(double lambda);
CountModel make_degenerate_count(std::uint64_t n0);

// --- claim-size constructors -------------------------------------------

SeverityModel make_severity_exponential(double mu);
SeverityModel make_severity_bounded(std::vector<std::pair<double, double>> atoms);
SeverityModel make_severity_pareto(double beta_index, double x_min);

// Law of c*X for c > 0; used by the scale-invariance checks.
SeverityModel scale_severity(const SeverityModel& sev, double c);

// --- operations ----------------------------------------------------------

// Cell masses by mode: floor maps X to h*floor(X/h) (stochastic lower
// bound), upper to h*ceil(X/h) (upper bound), round to the nearest cell.
// Throws numeric_error when the mass beyond max_cells exceeds eps_lat.
LatticePMF discretize_severity(const SeverityModel& severity, double h,
                               DiscretizeMode mode, double eps_lat = 1e-13,
                               std::size_t max_cells = (std::size_t{1} << 26));

// E[N - x | N > x] by direct summation, remainder kept below rel_tol of
// the accumulated value (numeric_error when n_cap terms do not suffice).
double count_mean_excess(const CountModel& count, double x,
                         double rel_tol = 1e-6,
                         std::uint64_t n_cap = 400000000ULL);

}  // namespace ctails

#endif
