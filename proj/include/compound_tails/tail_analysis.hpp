#ifndef COMPOUND_TAILS_TAIL_ANALYSIS_HPP
#define COMPOUND_TAILS_TAIL_ANALYSIS_HPP

#include <functional>
#include <utility>
#include <vector>

#include "compound_tails/distributions.hpp"

namespace ctails {

// Tail functions enter estimators in the log domain.
using LogTailFn = std::function<double(double)>;

enum class Trend { converging, diverging, inconclusive };

const char* to_string(Trend t);

// Finite-x proxy for a limit statement: samples on a geometric grid,
// aggregated over the last decade of x. `value` is the operation's
// declared aggregation of the window samples (documented per operation).
struct LimitEstimate {
    double value = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    Trend trend = Trend::inconclusive;
    std::vector<std::pair<double, double>> samples;  // (x, ratio)
};

// Trend-classification thresholds are configuration, not constants:
// the limits themselves come with no convergence rates.
struct EstimatorConfig {
    double dispersion_tol = 1e-2;   // relative spread within the window
    double drift_tol = 1e-2;        // relative first-half/second-half drift
    double cv_gap_tol = 0.05;       // |limsup(y=0.99) - 1| allowed for class C
    double vanish_tol = 1e-2;       // "tends to zero" cutoff
    double log_floor = log_tail_floor;
    std::vector<double> cv_y_probe = {0.9, 0.95, 0.99};
};

// -- consistent variation / dominated variation (class C / D) --------------

// Samples tail(x*y)/tail(x) for fixed y in (0,1). Converging means the
// window is stable *and* the y -> 1 probe tends to 1 (class C signature).
// Aggregation: last-window mean.
LimitEstimate cv_profile(const LogTailFn& log_tail, double y,
                         const std::vector<double>& x_grid,
                         const EstimatorConfig& cfg = {});

// Upper Matuszewska index of 1/tail: for each y > 1 estimate
// liminf tail(xy)/tail(x) by the last-window minimum, then regress
// -log of it on log y. Aggregation: regression slope.
LimitEstimate matuszewska_upper(const LogTailFn& log_tail,
                                const std::vector<double>& y_grid,
                                const std::vector<double>& x_grid,
                                const EstimatorConfig& cfg = {});

// Upper order of 1/tail: samples -log tail(x)/log x, last-window max.
LimitEstimate upper_order(const LogTailFn& log_tail,
                          const std::vector<double>& x_grid,
                          const EstimatorConfig& cfg = {});

// -- Gumbel-domain diagnostics ----------------------------------------------

// The auxiliary function: the model's analytic one when present, else
// the mean-excess estimate via count_mean_excess.
std::function<double(double)> gumbel_aux(const CountModel& count);

struct SelfNeglectReport {
    // a(x + y a(x))/a(x) per probed y; converging means -> 1.
    std::vector<std::pair<double, LimitEstimate>> ratio_by_y;
    // a(x)/x; converging means -> 0.
    LimitEstimate a_over_x;
    bool passes() const;
};

SelfNeglectReport self_neglect_check(const std::function<double(double)>& a,
                                     const std::vector<double>& x_grid,
                                     const std::vector<double>& y_set,
                                     const EstimatorConfig& cfg = {});

// g-hat(x) = a(x) * (log tail(x) - log tail(x+1)): the representation
// integrand sampled on the grid; -> 1 for Gumbel-domain models.
// Aggregation: last-window mean.
LimitEstimate representation_integrand(const CountModel& count,
                                       const std::vector<double>& x_grid,
                                       const EstimatorConfig& cfg = {});

// Discrete Gumbel criterion: q_n = P[N>n]/P[N=n] must diverge with
// vanishing increments. Samples are (n, q_{n+1}-q_n); value is the
// last-window max |increment|; converging iff both parts hold.
LimitEstimate anderson_gumbel_check(const CountModel& count,
                                    const std::vector<double>& n_grid,
                                    const EstimatorConfig& cfg = {});

// Discrete Frechet criterion: n P[N=n]/P[N>n] -> alpha.
// Aggregation: last-window mean (the alpha estimate).
LimitEstimate von_mises_frechet_check(const CountModel& count,
                                      const std::vector<double>& n_grid,
                                      const EstimatorConfig& cfg = {});

// liminf log f(x)/log x. Samples are log f(x)/log x as defined; the
// aggregation is the last-window log-log regression slope, which washes
// out constant factors the raw ratio would drag in at finite x.
LimitEstimate lower_order(const std::function<double(double)>& f,
                          const std::vector<double>& x_grid,
                          const EstimatorConfig& cfg = {});

}  // namespace ctails

#endif
