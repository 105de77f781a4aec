#include "compound_tails/tail_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "compound_tails/errors.hpp"

namespace ctails {

const char* to_string(Trend t) {
    switch (t) {
        case Trend::converging: return "converging";
        case Trend::diverging: return "diverging";
        case Trend::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

// Last decade of the sampled x range, at least 3 points.
std::size_t window_start(const std::vector<std::pair<double, double>>& s) {
    if (s.size() <= 3) return 0;
    const double cut = s.back().first / 10.0;
    std::size_t i = s.size();
    while (i > 0 && s[i - 1].first > cut) --i;
    return std::min(i, s.size() - 3);
}

struct WindowStats {
    double mean, min, max, first, last;
    double lo_x, hi_x;
    std::size_t n;
};

WindowStats window_stats(const std::vector<std::pair<double, double>>& s) {
    const std::size_t i0 = window_start(s);
    WindowStats w{0, pos_inf, neg_inf, s[i0].second, s.back().second,
                  s[i0].first, s.back().first, s.size() - i0};
    for (std::size_t i = i0; i < s.size(); ++i) {
        w.mean += s[i].second;
        w.min = std::min(w.min, s[i].second);
        w.max = std::max(w.max, s[i].second);
    }
    w.mean /= static_cast<double>(w.n);
    return w;
}

double rel_dispersion(const WindowStats& w) {
    const double scale = std::max(std::abs(w.mean), 1e-12);
    return (w.max - w.min) / scale;
}

double rel_drift(const WindowStats& w) {
    const double scale = std::max(std::abs(w.mean), 1e-12);
    return (w.last - w.first) / scale;
}

// Least-squares slope of q against log x over the last decade.
double window_loglog_slope(const std::vector<std::pair<double, double>>& xs,
                           const std::vector<double>& ys) {
    const std::size_t i0 = window_start(xs);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::size_t n = xs.size() - i0;
    for (std::size_t i = i0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i].first);
        sx += lx; sy += ys[i]; sxx += lx * lx; sxy += lx * ys[i];
    }
    const double nd = static_cast<double>(n);
    return (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
}

void require_usable(const std::vector<std::pair<double, double>>& s,
                    double largest_usable, const char* what) {
    if (s.size() < 4)
        throw numeric_error(std::string(what) +
                                ": tail underflow on grid; largest usable x = " +
                                std::to_string(largest_usable),
                            0.0);
}

}  // namespace

LimitEstimate cv_profile(const LogTailFn& log_tail, double y,
                         const std::vector<double>& x_grid,
                         const EstimatorConfig& cfg) {
    if (!(y > 0.0 && y < 1.0)) throw domain_error("cv_profile: y must be in (0,1)");
    LimitEstimate est;
    double largest_usable = 0.0;
    for (double x : x_grid) {
        const double lt = log_tail(x);
        const double lty = log_tail(x * y);
        if (lt <= cfg.log_floor || lty <= cfg.log_floor) continue;
        largest_usable = x;
        est.samples.emplace_back(x, std::exp(lty - lt));
    }
    require_usable(est.samples, largest_usable, "cv_profile");
    const WindowStats w = window_stats(est.samples);
    est.value = w.mean;
    est.window_lo = w.lo_x;
    est.window_hi = w.hi_x;

    const bool stable = rel_dispersion(w) < cfg.dispersion_tol;
    const bool drifting_up = rel_drift(w) > cfg.drift_tol;
    if (!stable && drifting_up) {
        est.trend = Trend::diverging;
        return est;
    }
    if (!stable) {
        est.trend = Trend::inconclusive;
        return est;
    }
    // y -> 1 probe: the last-window limsup proxy must approach 1.
    double prev = pos_inf;
    bool towards_one = true;
    for (double yp : cfg.cv_y_probe) {
        double worst = neg_inf;
        const double cut = est.samples.back().first / 10.0;
        for (auto& [x, unused] : est.samples) {
            (void)unused;
            if (x <= cut) continue;
            const double lt = log_tail(x);
            const double lty = log_tail(x * yp);
            if (lt <= cfg.log_floor || lty <= cfg.log_floor) continue;
            worst = std::max(worst, std::exp(lty - lt));
        }
        if (worst > prev + cfg.dispersion_tol) towards_one = false;
        prev = worst;
    }
    const bool close = std::abs(prev - 1.0) <= cfg.cv_gap_tol;
    est.trend = (towards_one && close) ? Trend::converging : Trend::inconclusive;
    return est;
}

LimitEstimate matuszewska_upper(const LogTailFn& log_tail,
                                const std::vector<double>& y_grid,
                                const std::vector<double>& x_grid,
                                const EstimatorConfig& cfg) {
    for (double y : y_grid)
        if (!(y > 1.0)) throw domain_error("matuszewska_upper: y values must exceed 1");
    LimitEstimate est;
    bool exploding = false;
    bool all_flat = true;
    for (double y : y_grid) {
        std::vector<std::pair<double, double>> lr;  // (x, log ratio)
        double largest_usable = 0.0;
        for (double x : x_grid) {
            const double lt = log_tail(x);
            const double lty = log_tail(x * y);
            if (lt <= cfg.log_floor || lty <= cfg.log_floor) continue;
            largest_usable = x;
            lr.emplace_back(x, lty - lt);
            if (lty - lt != 0.0) all_flat = false;
        }
        require_usable(lr, largest_usable, "matuszewska_upper");
        const std::size_t i0 = window_start(lr);
        double lmin = pos_inf;
        for (std::size_t i = i0; i < lr.size(); ++i) lmin = std::min(lmin, lr[i].second);
        // liminf proxy falling without floor: alpha_F = infinity.
        if (lmin < -60.0 || lr.back().second < 2.0 * lr[i0].second - 1.0 - 60.0)
            exploding = true;
        est.samples.emplace_back(y, std::exp(lmin));
        est.window_lo = lr[i0].first;
        est.window_hi = lr.back().first;
    }
    if (all_flat) {
        est.trend = Trend::inconclusive;  // no tail decay on the grid
        est.value = 0.0;
        return est;
    }
    if (exploding) {
        est.trend = Trend::diverging;
        est.value = pos_inf;
        return est;
    }
    // regress -log F*(y) on log y
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [y, fstar] : est.samples) {
        const double lx = std::log(y), ly = -std::log(fstar);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(est.samples.size());
    est.value = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    est.trend = Trend::converging;
    return est;
}

LimitEstimate upper_order(const LogTailFn& log_tail,
                          const std::vector<double>& x_grid,
                          const EstimatorConfig& cfg) {
    LimitEstimate est;
    double largest_usable = 0.0;
    bool any_decay = false;
    for (double x : x_grid) {
        if (x <= 1.0) continue;
        const double lt = log_tail(x);
        if (lt <= cfg.log_floor) continue;
        largest_usable = x;
        est.samples.emplace_back(x, -lt / std::log(x));
        if (lt != 0.0) any_decay = true;
    }
    require_usable(est.samples, largest_usable, "upper_order");
    const WindowStats w = window_stats(est.samples);
    est.value = w.max;
    est.window_lo = w.lo_x;
    est.window_hi = w.hi_x;
    if (!any_decay) {
        est.trend = Trend::inconclusive;
        return est;
    }
    if (rel_drift(w) > cfg.drift_tol)
        est.trend = Trend::diverging;
    else if (rel_dispersion(w) < cfg.dispersion_tol)
        est.trend = Trend::converging;
    else
        est.trend = Trend::inconclusive;
    return est;
}

std::function<double(double)> gumbel_aux(const CountModel& count) {
    if (count.has_aux()) return count.aux;
    return [count](double x) { return count_mean_excess(count, x, 1e-4); };
}

bool SelfNeglectReport::passes() const {
    if (a_over_x.trend != Trend::converging) return false;
    for (auto& [y, est] : ratio_by_y)
        if (est.trend != Trend::converging) return false;
    return true;
}

SelfNeglectReport self_neglect_check(const std::function<double(double)>& a,
                                     const std::vector<double>& x_grid,
                                     const std::vector<double>& y_set,
                                     const EstimatorConfig& cfg) {
    SelfNeglectReport rep;
    for (double y : y_set) {
        LimitEstimate est;
        for (double x : x_grid) {
            const double ax = a(x);
            if (!(ax > 0.0)) throw domain_error("self_neglect_check: a(x) <= 0");
            const double shifted = x + y * ax;
            if (shifted <= 0.0) continue;  // y < 0 may step below the domain
            est.samples.emplace_back(x, a(shifted) / ax);
        }
        require_usable(est.samples, x_grid.back(), "self_neglect_check");
        const WindowStats w = window_stats(est.samples);
        est.value = w.mean;
        est.window_lo = w.lo_x;
        est.window_hi = w.hi_x;
        est.trend = (std::abs(w.last - 1.0) < cfg.dispersion_tol &&
                     std::abs(w.mean - 1.0) < 2.0 * cfg.dispersion_tol)
                        ? Trend::converging
                        : Trend::inconclusive;
        rep.ratio_by_y.emplace_back(y, std::move(est));
    }
    LimitEstimate& ax = rep.a_over_x;
    for (double x : x_grid) ax.samples.emplace_back(x, a(x) / x);
    const WindowStats w = window_stats(ax.samples);
    ax.value = w.mean;
    ax.window_lo = w.lo_x;
    ax.window_hi = w.hi_x;
    if (w.last < cfg.vanish_tol && w.last <= w.first)
        ax.trend = Trend::converging;
    else if (rel_dispersion(w) < cfg.dispersion_tol)
        ax.trend = Trend::diverging;  // settled on a nonzero constant
    else
        ax.trend = Trend::inconclusive;
    return rep;
}

LimitEstimate representation_integrand(const CountModel& count,
                                       const std::vector<double>& x_grid,
                                       const EstimatorConfig& cfg) {
    if (!count.has_aux())
        throw contract_error("representation_integrand: model has no analytic aux");
    LimitEstimate est;
    double largest_usable = 0.0;
    for (double x : x_grid) {
        const double lt0 = count.log_tail(x);
        const double lt1 = count.log_tail(x + 1.0);
        if (lt0 <= cfg.log_floor || lt1 <= cfg.log_floor) continue;
        if (lt0 == lt1) continue;  // no step inside [x, x+1]
        largest_usable = x;
        est.samples.emplace_back(x, count.aux(x) * (lt0 - lt1));
    }
    require_usable(est.samples, largest_usable, "representation_integrand");
    const WindowStats w = window_stats(est.samples);
    est.value = w.mean;
    est.window_lo = w.lo_x;
    est.window_hi = w.hi_x;
    est.trend = (rel_dispersion(w) < cfg.dispersion_tol &&
                 std::abs(w.mean - 1.0) < 5.0 * cfg.dispersion_tol)
                    ? Trend::converging
                    : Trend::inconclusive;
    return est;
}

LimitEstimate anderson_gumbel_check(const CountModel& count,
                                    const std::vector<double>& n_grid,
                                    const EstimatorConfig& cfg) {
    LimitEstimate est;
    std::vector<double> qs;
    for (double nd : n_grid) {
        const std::uint64_t n = static_cast<std::uint64_t>(std::floor(nd));
        const double lp = count.log_pmf(n);
        const double lp1 = count.log_pmf(n + 1);
        if (lp == neg_inf || lp1 == neg_inf)
            throw domain_error("anderson_gumbel_check: zero pmf on grid");
        const double q0 = std::exp(count.log_tail(static_cast<double>(n)) - lp);
        const double q1 = std::exp(count.log_tail(static_cast<double>(n) + 1.0) - lp1);
        qs.push_back(q0);
        est.samples.emplace_back(static_cast<double>(n), q1 - q0);
    }
    require_usable(est.samples, n_grid.empty() ? 0.0 : n_grid.back(),
                   "anderson_gumbel_check");
    const std::size_t i0 = window_start(est.samples);
    double max_incr = 0.0;
    for (std::size_t i = i0; i < est.samples.size(); ++i)
        max_incr = std::max(max_incr, std::abs(est.samples[i].second));
    est.value = max_incr;
    est.window_lo = est.samples[i0].first;
    est.window_hi = est.samples.back().first;
    const bool q_diverges = qs.back() > 2.0 * qs.front() && qs.back() > 10.0;
    const bool incr_vanish = max_incr < cfg.dispersion_tol * std::max(1.0, qs.back() / 100.0);
    est.trend = (q_diverges && incr_vanish) ? Trend::converging : Trend::inconclusive;
    return est;
}

LimitEstimate von_mises_frechet_check(const CountModel& count,
                                      const std::vector<double>& n_grid,
                                      const EstimatorConfig& cfg) {
    LimitEstimate est;
    for (double nd : n_grid) {
        const std::uint64_t n = static_cast<std::uint64_t>(std::floor(nd));
        const double lp = count.log_pmf(n);
        if (lp == neg_inf)
            throw domain_error("von_mises_frechet_check: zero pmf on grid");
        const double lt = count.log_tail(static_cast<double>(n));
        if (lt <= cfg.log_floor) continue;
        est.samples.emplace_back(static_cast<double>(n),
                                 static_cast<double>(n) * std::exp(lp - lt));
    }
    require_usable(est.samples, n_grid.empty() ? 0.0 : n_grid.back(),
                   "von_mises_frechet_check");
    const WindowStats w = window_stats(est.samples);
    est.value = w.mean;
    est.window_lo = w.lo_x;
    est.window_hi = w.hi_x;
    if (rel_dispersion(w) < 2.0 * cfg.dispersion_tol)
        est.trend = Trend::converging;
    else if (rel_drift(w) > cfg.drift_tol)
        est.trend = Trend::diverging;
    else
        est.trend = Trend::inconclusive;
    return est;
}

LimitEstimate lower_order(const std::function<double(double)>& f,
                          const std::vector<double>& x_grid,
                          const EstimatorConfig& cfg) {
    LimitEstimate est;
    std::vector<double> logf;
    for (double x : x_grid) {
        if (x <= 1.0) continue;
        const double fx = f(x);
        if (!(fx > 0.0)) throw domain_error("lower_order: f must be positive");
        est.samples.emplace_back(x, std::log(fx) / std::log(x));
        logf.push_back(std::log(fx));
    }
    require_usable(est.samples, x_grid.back(), "lower_order");
    est.value = window_loglog_slope(est.samples, logf);
    const std::size_t i0 = window_start(est.samples);
    est.window_lo = est.samples[i0].first;
    est.window_hi = est.samples.back().first;
    // Stability check: slope over the two halves of the window.
    const std::size_t mid = i0 + (est.samples.size() - i0) / 2;
    std::vector<std::pair<double, double>> s1(est.samples.begin() + static_cast<std::ptrdiff_t>(i0),
                                              est.samples.begin() + static_cast<std::ptrdiff_t>(mid));
    std::vector<std::pair<double, double>> s2(est.samples.begin() + static_cast<std::ptrdiff_t>(mid),
                                              est.samples.end());
    if (s1.size() >= 3 && s2.size() >= 3) {
        std::vector<double> f1, f2;
        for (auto& [x, r] : s1) f1.push_back(r * std::log(x));
        for (auto& [x, r] : s2) f2.push_back(r * std::log(x));
        const double sl1 = window_loglog_slope(s1, f1);
        const double sl2 = window_loglog_slope(s2, f2);
        est.trend = std::abs(sl1 - sl2) < cfg.dispersion_tol ? Trend::converging
                                                             : Trend::inconclusive;
    } else {
        est.trend = Trend::inconclusive;
    }
    return est;
}

}  // namespace ctails
