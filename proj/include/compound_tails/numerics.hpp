#ifndef COMPOUND_TAILS_NUMERICS_HPP
#define COMPOUND_TAILS_NUMERICS_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "compound_tails/errors.hpp"

namespace ctails {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Tails are carried in the log domain throughout; anything below this is
// treated as underflowed for estimator grids (10^-300 territory).
inline constexpr double log_tail_floor = -690.7755278982137;  // ln(1e-300)

inline double log_add(double la, double lb) {
    if (la == neg_inf) return lb;
    if (lb == neg_inf) return la;
    const double hi = la > lb ? la : lb;
    const double lo = la > lb ? lb : la;
    return hi + std::log1p(std::exp(lo - hi));
}

// log(e^la - e^lb) for la >= lb; -inf when equal within rounding.
inline double log_sub(double la, double lb) {
    if (lb == neg_inf) return la;
    const double d = la - lb;
    if (d < 0) throw domain_error("log_sub: negative difference");
    if (d == 0) return neg_inf;
    return la + std::log(-std::expm1(-d));
}

inline double log_sum(const std::vector<double>& ls) {
    double hi = neg_inf;
    for (double v : ls) hi = std::max(hi, v);
    if (hi == neg_inf) return neg_inf;
    double acc = 0;
    for (double v : ls) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

// Strictly increasing geometric grid; lo and hi are included.
inline std::vector<double> geometric_grid(double lo, double hi, int points) {
    if (!(lo > 0) || !(hi > lo) || points < 2)
        throw domain_error("geometric_grid: need 0 < lo < hi and points >= 2");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// Golden-section minimizer for a strictly unimodal objective on [a, b].
// Returns the minimizing abscissa; tolerance is absolute in the argument.
inline double golden_minimize(const std::function<double(double)>& f, double a,
                              double b, double tol = 1e-10, int max_iter = 200) {
    static const double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace ctails

#endif
