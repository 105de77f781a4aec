#ifndef COMPOUND_TAILS_TAIL_CURVE_HPP
#define COMPOUND_TAILS_TAIL_CURVE_HPP

#include <string>
#include <vector>

#include "compound_tails/numerics.hpp"

namespace ctails {

enum class Provenance { lattice_oracle, poisson_inversion, approximation, monte_carlo };

const char* to_string(Provenance p);

// A tail curve: log P[S > x] on a sorted grid, with optional rigorous
// per-point brackets (both containing the truth) or Monte Carlo standard
// errors on the probability scale.
struct TailCurve {
    Provenance provenance = Provenance::approximation;
    std::string name;  // approximation name / engine detail

    std::vector<double> x;
    std::vector<double> log_tail;
    std::vector<double> log_lower;  // empty when no brackets
    std::vector<double> log_upper;
    std::vector<double> se;  // empty unless Monte Carlo

    bool has_brackets() const { return !log_lower.empty(); }
    bool has_se() const { return !se.empty(); }
    std::size_t size() const { return x.size(); }
};

// Per-x comparison of two curves on a common grid: ratios of
// probabilities and of log-tails, with bracket/SE propagation.
struct RatioTable {
    std::vector<double> x;
    std::vector<double> prob_ratio;      // exp(la - lb)
    std::vector<double> log_tail_ratio;  // la / lb
    std::vector<double> ratio_lower;     // bracket/SE band on prob_ratio
    std::vector<double> ratio_upper;
};

RatioTable compare(const TailCurve& a, const TailCurve& b);

// CSV emission: header row, 17 significant digits, LF line endings.
std::string to_csv(const TailCurve& c);
std::string to_csv(const RatioTable& t);
TailCurve curve_from_csv(const std::string& text);

}  // namespace ctails

#endif
