#include "compound_tails/compound_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "compound_tails/errors.hpp"
#include "fft_conv.hpp"

namespace ctails {

namespace {

using detail::Pmf;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("COMPOUND_TAILS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

double tail_int(const CountModel& count, std::int64_t n) {
    return n < 0 ? 1.0 : std::exp(count.log_tail(static_cast<double>(n)));
}

// Chernoff machinery over the in-array part of the severity lattice.
// Any evaluation point t yields a valid bound, so the optimizer only
// needs to come close to the minimum.
class ChernoffBounder {
public:
    ChernoffBounder(const Pmf& f, double h) : f_(f), h_(h) {}

    double log_mgf(double t) const {
        double hi = neg_inf;
        for (std::size_t i = 0; i < f_.m.size(); ++i) {
            if (f_.m[i] == 0.0) continue;
            const double e = std::log(f_.m[i]) + t * static_cast<double>(f_.lo + i) * h_;
            hi = std::max(hi, e);
        }
        if (hi == neg_inf) return neg_inf;
        double acc = 0.0;
        for (std::size_t i = 0; i < f_.m.size(); ++i) {
            if (f_.m[i] == 0.0) continue;
            acc += std::exp(std::log(f_.m[i]) +
                            t * static_cast<double>(f_.lo + i) * h_ - hi);
        }
        return hi + std::log(acc);
    }

    // log upper bound for P[sum of n in-array claims > x]
    double log_bound_upper(std::uint64_t n, double x) const {
        if (n == 0) return neg_inf;
        return minimize([this, n, x](double t) {
            return static_cast<double>(n) * log_mgf(t) - t * x;
        });
    }

    // log upper bound for P[sum of n in-array claims <= x]
    double log_bound_lower(std::uint64_t n, double x) const {
        return minimize([this, n, x](double t) {
            return static_cast<double>(n) * log_mgf(-t) + t * x;
        });
    }

    // Full upper bound on P[S_n > x] including beyond-cap claims.
    double prob_upper(std::uint64_t n, double x) const {
        const double arr = std::exp(std::min(0.0, log_bound_upper(n, x)));
        return std::min(1.0, arr + static_cast<double>(n) * f_.beyond);
    }

    double prob_lower_dev(std::uint64_t n, double x) const {
        return std::exp(std::min(0.0, log_bound_lower(n, x)));
    }

private:
    template <typename F>
    double minimize(const F& obj) const {
        // golden section on log t; unimodal since the exponent is convex in t
        const double ulo = std::log(1e-9), uhi = std::log(1e4);
        const double u = golden_minimize([&](double uu) { return obj(std::exp(uu)); },
                                         ulo, uhi, 1e-8, 140);
        double best = obj(std::exp(u));
        best = std::min(best, obj(1e-9));
        best = std::min(best, obj(1e4));
        return best;
    }

    const Pmf& f_;
    double h_;
};

// Lazily built dyadic convolution powers of the severity lattice,
// shared read-only by all grid-point tasks once built.
class PowerTable {
public:
    PowerTable(Pmf f, std::size_t cap) : cap_(cap) { pows_.push_back(std::move(f)); }

    const Pmf& get(std::size_t k) {
        std::lock_guard<std::mutex> lock(mu_);
        while (pows_.size() <= k) {
            const Pmf& top = pows_.back();
            pows_.push_back(detail::convolve(top, top, cap_));
        }
        return pows_[k];
    }

    Pmf power(std::uint64_t n) {
        Pmf acc = Pmf::delta0();
        for (std::size_t k = 0; n != 0; ++k, n >>= 1)
            if (n & 1) acc = detail::convolve(acc, get(k), cap_);
        return acc;
    }

private:
    std::size_t cap_;
    std::mutex mu_;
    std::vector<Pmf> pows_;
};

// Exceedance probability P[S + T > x] where cells >= j_x count as "> x".
// ss is the absolute-cell suffix array of S (see build_suffix).
double exceedance(const Pmf& S, const std::vector<double>& ss, const Pmf& T,
                  const std::vector<double>& ts, std::int64_t j_x) {
    const std::int64_t s_lo = static_cast<std::int64_t>(S.lo);
    const std::int64_t s_hi = static_cast<std::int64_t>(S.hi);
    const std::int64_t t_lo = static_cast<std::int64_t>(T.lo);
    const std::int64_t t_hi = static_cast<std::int64_t>(T.hi);
    auto s_suffix = [&](std::int64_t u) -> double {
        if (u <= s_lo) return ss.empty() ? 0.0 : ss[0];
        if (u >= s_hi) return 0.0;
        return ss[static_cast<std::size_t>(u - s_lo)];
    };
    auto t_suffix = [&](std::int64_t w) -> double {
        if (w <= t_lo) return ts.empty() ? 0.0 : ts[0];
        if (w >= t_hi) return 0.0;
        return ts[static_cast<std::size_t>(w - t_lo)];
    };
    const double sum_s = s_suffix(s_lo);
    long double q = S.beyond + static_cast<long double>(sum_s) * T.beyond;
    // u >= j_x - t_lo: the entire in-array T mass clears the threshold
    q += static_cast<long double>(s_suffix(j_x - t_lo)) * t_suffix(t_lo);
    // partial range
    const std::int64_t u_begin = std::max(s_lo, j_x - t_hi + 1);
    const std::int64_t u_end = std::min(s_hi, j_x - t_lo);
    for (std::int64_t u = u_begin; u < u_end; ++u) {
        const double mu_ = S.m[static_cast<std::size_t>(u - s_lo)];
        if (mu_ == 0.0) continue;
        q += static_cast<long double>(mu_) * t_suffix(j_x - u);
    }
    return std::min(1.0, static_cast<double>(q));
}

std::vector<double> build_suffix(const Pmf& p) {
    std::vector<double> s(p.m.size() + 1, 0.0);
    long double acc = 0.0L;
    for (std::size_t i = p.m.size(); i-- > 0;) {
        acc += p.m[i];
        s[i] = static_cast<double>(acc);
    }
    return s;
}

struct PointBracket {
    double lower = 0.0, upper = 0.0;
};

// Bracket for one grid point: exact block sums across a window of count
// values around x/mu, Chernoff bound below it, count tail above it.
PointBracket compound_point(const CountModel& count, const Pmf& f, double h,
                            double mu_f, PowerTable& powers, std::size_t cap,
                            double x, double eps_N, const EngineOptions& opt) {
    const ChernoffBounder cb(f, h);
    const std::int64_t j_x = static_cast<std::int64_t>(std::floor(x / h)) + 1;

    const std::uint64_t n_star =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(x / mu_f)));

    // median crossing: smallest n with P[S_n <= x] bound below 1/2
    std::uint64_t step = 1, n_med = n_star;
    while (cb.prob_lower_dev(n_med, x) > 0.5) {
        n_med = n_star + step;
        step *= 2;
        if (step > (std::uint64_t{1} << 50))
            throw numeric_error("compound oracle: count window search diverged");
    }

    // floor on the answer: every n >= n_med contributes at least 1/2,
    // and a single claim clearing x contributes through any n >= 1
    const std::vector<double> fs = build_suffix(f);
    const Pmf unit = Pmf::delta0();
    const std::vector<double> us = build_suffix(unit);
    const double q1 = exceedance(f, fs, unit, us, j_x);
    const double t_floor = std::max(tail_int(count, static_cast<std::int64_t>(n_med) - 1) * 0.5,
                                    tail_int(count, 0) * q1);
    if (t_floor < 1e-300)
        throw numeric_error(
            "compound oracle: tail below the lattice linear-domain range; "
            "use the poisson_inversion engine",
            t_floor);

    const double cut_abs = std::clamp(eps_N, 1e-300, 1e-3) * t_floor;

    // window top: count mass above it must be either negligible or certain
    // to exceed x (lower-deviation bound below cut)
    auto top_done = [&](std::uint64_t n) {
        const double tl = tail_int(count, static_cast<std::int64_t>(n) - 1);
        if (tl <= cut_abs) return true;
        return tl * cb.prob_lower_dev(n, x) <= cut_abs;
    };
    std::uint64_t hi_a = n_med, hi_b = n_med;
    step = 1;
    while (!top_done(hi_b)) {
        hi_a = hi_b;
        hi_b = n_med + step;
        step *= 2;
        if (step > (std::uint64_t{1} << 50))
            throw numeric_error("compound oracle: window top search diverged");
    }
    while (hi_b - hi_a > 1) {
        const std::uint64_t mid = hi_a + (hi_b - hi_a) / 2;
        if (top_done(mid)) hi_b = mid; else hi_a = mid;
    }
    std::uint64_t n_hi = hi_b;

    // window bottom: largest n whose upper Chernoff bound is below cut
    std::uint64_t n_lo = 0;
    {
        std::uint64_t lo_a = 0, lo_b = n_star;  // pred(0) true
        auto pred = [&](std::uint64_t n) { return cb.prob_upper(n, x) <= cut_abs; };
        if (pred(n_star)) {
            n_lo = n_star;
        } else {
            while (lo_b - lo_a > 1) {
                const std::uint64_t mid = lo_a + (lo_b - lo_a) / 2;
                if (pred(mid)) lo_a = mid; else lo_b = mid;
            }
            n_lo = lo_a;
            while (n_lo > 0 && !pred(n_lo)) n_lo /= 2;  // non-monotone guard
        }
    }
    if (n_hi <= n_lo) n_hi = n_lo + 1;

    // block width targeting bracket_rel relative width
    const std::uint64_t span = n_hi - n_lo;
    double pmf_max = 0.0;
    for (int i = 0; i <= 32; ++i) {
        const std::uint64_t n =
            n_lo + (span - 1) * static_cast<std::uint64_t>(i) / 32;
        pmf_max = std::max(pmf_max, std::exp(count.log_pmf(n)));
    }
    pmf_max *= 1.25;
    std::uint64_t delta = 1;
    if (pmf_max > 0.0)
        delta = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(opt.bracket_rel * t_floor / pmf_max));
    delta = std::min<std::uint64_t>(delta, span);
    if ((span + delta - 1) / delta > opt.max_halo_boundaries)
        delta = (span + opt.max_halo_boundaries - 1) / opt.max_halo_boundaries;

    // exact window sweep
    Pmf S = powers.power(n_lo);
    const std::vector<double> ss = build_suffix(S);
    const Pmf f_delta = powers.power(delta);

    PointBracket out;
    long double lower = 0.0L, upper = 0.0L;
    Pmf T = Pmf::delta0();
    std::vector<double> ts = build_suffix(T);
    std::uint64_t m = n_lo;
    double q_here = exceedance(S, ss, T, ts, j_x);
    while (m < n_hi) {
        const std::uint64_t m_next = std::min(m + delta, n_hi);
        T = detail::convolve(T, f_delta, cap);
        ts = build_suffix(T);
        double q_next = exceedance(S, ss, T, ts, j_x);
        if (q_next < q_here) q_next = q_here;  // enforce monotone within rounding
        const double p_block = tail_int(count, static_cast<std::int64_t>(m) - 1) -
                               tail_int(count, static_cast<std::int64_t>(m_next) - 1);
        lower += static_cast<long double>(p_block) * q_here;
        upper += static_cast<long double>(p_block) * q_next;
        q_here = q_next;
        m = m_next;
    }
    // above the window: tail mass, exceedance between q(n_hi) and 1
    const double p_above = tail_int(count, static_cast<std::int64_t>(n_hi) - 1);
    lower += static_cast<long double>(p_above) * q_here;
    upper += p_above;
    // below the window
    if (n_lo > 0) {
        const double p_below = 1.0 - tail_int(count, static_cast<std::int64_t>(n_lo) - 1);
        upper += static_cast<long double>(p_below) * cb.prob_upper(n_lo, x);
    }

    out.lower = std::min(1.0, static_cast<double>(lower));
    out.upper = std::min(1.0, static_cast<double>(upper));
    if (out.upper < out.lower) out.upper = out.lower;
    return out;
}

}  // namespace

TailCurve exact_compound_tail(const CountModel& count, const LatticePMF& sev_lattice,
                              const std::vector<double>& x_grid, double eps_N,
                              const EngineOptions& opt) {
    if (!(eps_N > 0.0 && eps_N <= 1e-3))
        throw domain_error("exact_compound_tail: eps_N must lie in (0, 1e-3]");
    if (x_grid.empty()) throw contract_error("exact_compound_tail: empty grid");
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        if (x_grid[i] < 0.0 || (i > 0 && x_grid[i] <= x_grid[i - 1]))
            throw contract_error("exact_compound_tail: grid must be increasing and nonnegative");
    }
    const double h = sev_lattice.h;
    if (!(h > 0.0)) throw contract_error("exact_compound_tail: lattice spacing must be positive");

    const std::size_t cap =
        static_cast<std::size_t>(std::floor(x_grid.back() / h)) + 2;

    // severity lattice -> working pmf, entries past cap folded to beyond
    Pmf f;
    f.lo = sev_lattice.offset;
    f.hi = sev_lattice.offset + sev_lattice.size();
    f.m.resize(sev_lattice.size());
    long double in_sum = 0.0L;
    for (std::size_t k = 0; k < sev_lattice.size(); ++k) {
        const std::size_t cell = sev_lattice.offset + k;
        const double mass = std::exp(sev_lattice.log_mass[k]);
        if (cell >= cap) {
            f.m[k] = 0.0;
            continue;
        }
        f.m[k] = mass;
        in_sum += mass;
    }
    f.trim_zeros();
    f.beyond = std::max(0.0, 1.0 - static_cast<double>(in_sum));

    TailCurve curve;
    curve.provenance = Provenance::lattice_oracle;
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "lattice_oracle(h=%.10g)", h);
        curve.name = buf;
    }
    curve.x = x_grid;
    curve.log_tail.assign(x_grid.size(), neg_inf);
    curve.log_lower.assign(x_grid.size(), neg_inf);
    curve.log_upper.assign(x_grid.size(), neg_inf);

    // N == 0 almost surely, or severities identically zero: S_N = 0
    const double mu_f = f.mean_in_array() * h;
    if (count.log_tail(0.0) == neg_inf) return curve;
    if (!(mu_f > 0.0)) {
        if (f.beyond == 0.0) return curve;
        throw contract_error(
            "exact_compound_tail: severity lattice mass is entirely beyond the grid");
    }

    // memory budget: powers table (~2 cap) plus per-thread S + suffix + scratch
    const int threads = std::max(1, std::min<int>(resolve_threads(opt.threads),
                                                  static_cast<int>(x_grid.size())));
    const std::size_t est_bytes =
        cap * 8 * (2 + static_cast<std::size_t>(threads) * 5);
    if (est_bytes > opt.memory_budget_bytes) {
        const double factor = static_cast<double>(est_bytes) /
                              static_cast<double>(opt.memory_budget_bytes);
        throw resource_error(
            "exact_compound_tail: lattice span exceeds the memory budget; "
            "use h >= " + std::to_string(h * std::exp2(std::ceil(std::log2(factor)))));
    }

    PowerTable powers(f, cap);

    // big tasks first
    std::vector<std::size_t> order(x_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= order.size()) return;
            const std::size_t i = order[k];
            try {
                const PointBracket pb = compound_point(count, f, h, mu_f, powers,
                                                       cap, x_grid[i], eps_N, opt);
                curve.log_lower[i] = pb.lower > 0.0 ? std::log(pb.lower) : neg_inf;
                curve.log_upper[i] = pb.upper > 0.0 ? std::log(pb.upper) : neg_inf;
                const double mid = 0.5 * (pb.lower + pb.upper);
                curve.log_tail[i] = mid > 0.0 ? std::log(mid) : neg_inf;
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return curve;
}

// --- Poisson inversion -------------------------------------------------------

namespace {

double log_poisson_pmf(double k, double lambda) {
    if (k == 0.0) return -lambda;
    return -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
}

}  // namespace

TailCurve poisson_inversion_tail(const CountModel& count,
                                 const std::vector<double>& t_grid, double mu) {
    if (!(mu > 0.0)) throw domain_error("poisson_inversion_tail: mu must be positive");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] <= t_grid[i - 1]))
            throw contract_error("poisson_inversion_tail: grid must be increasing and nonnegative");

    TailCurve curve;
    curve.provenance = Provenance::poisson_inversion;
    curve.name = "poisson_inversion";
    curve.x = t_grid;
    curve.log_tail.reserve(t_grid.size());
    curve.log_lower.reserve(t_grid.size());
    curve.log_upper.reserve(t_grid.size());

    for (double t : t_grid) {
        const double lambda = t / mu;
        auto lt = [&](double k) { return count.log_tail(k); };

        double acc = neg_inf;      // included terms
        double rem = neg_inf;      // bound on omitted terms (upper side only)
        if (lambda == 0.0) {
            acc = lt(0.0);
        } else {
            const double sd = std::sqrt(lambda);
            double k_lo = std::max(0.0, std::floor(lambda - 40.0 * sd - 10.0));
            double k_hi = std::ceil(lambda + 40.0 * sd + 10.0);

            // bulk sum, log-domain pmf recursion
            double lp = log_poisson_pmf(k_lo, lambda);
            for (double k = k_lo; k <= k_hi; k += 1.0) {
                acc = log_add(acc, lp + lt(k));
                lp += std::log(lambda) - std::log(k + 1.0);
            }

            // extend left in geometric segments; each segment is either
            // provably negligible or summed exactly
            double b = k_lo;  // exclusive top of the next segment
            double w = 64.0;
            while (b > 0.0) {
                const double a = std::max(0.0, b - w);
                // pmf increases with k below the mode
                const double seg_bound =
                    log_poisson_pmf(b - 1.0, lambda) + lt(a) + std::log(b - a);
                if (seg_bound < acc - 45.0) {
                    rem = log_add(rem, seg_bound);
                    if (a == 0.0) break;
                    b = a;
                    w *= 1.6;
                    continue;
                }
                double lpk = log_poisson_pmf(a, lambda);
                for (double k = a; k < b; k += 1.0) {
                    acc = log_add(acc, lpk + lt(k));
                    lpk += std::log(lambda) - std::log(k + 1.0);
                }
                b = a;
                w *= 1.6;
            }

            // extend right; pmf decreases above the mode and the count
            // tail decreases everywhere
            double a2 = k_hi + 1.0;
            w = 64.0;
            for (;;) {
                const double seg_bound =
                    log_poisson_pmf(a2, lambda) + lt(a2) + std::log(w);
                if (seg_bound < acc - 45.0) {
                    // remaining segments shrink geometrically in the bound;
                    // fold a conservative doubling of this one
                    rem = log_add(rem, seg_bound + std::log(2.0));
                    break;
                }
                double lpk = log_poisson_pmf(a2, lambda);
                for (double k = a2; k < a2 + w; k += 1.0) {
                    acc = log_add(acc, lpk + lt(k));
                    lpk += std::log(lambda) - std::log(k + 1.0);
                }
                a2 += w;
                w *= 1.6;
            }
        }

        const double up = log_add(acc, rem);
        curve.log_lower.push_back(acc);
        curve.log_upper.push_back(up);
        curve.log_tail.push_back(log_add(acc, rem - std::log(2.0)));
    }
    return curve;
}

TailCurve refine_and_extrapolate(const TailCurve& curve_h,
                                 const TailCurve& curve_h_half) {
    if (curve_h.x.size() != curve_h_half.x.size())
        throw contract_error("refine_and_extrapolate: grid size mismatch");
    for (std::size_t i = 0; i < curve_h.x.size(); ++i)
        if (curve_h.x[i] != curve_h_half.x[i])
            throw contract_error("refine_and_extrapolate: grid mismatch at index " +
                                 std::to_string(i));

    TailCurve out;
    out.provenance = Provenance::lattice_oracle;
    out.name = "lattice_oracle(richardson)";
    out.x = curve_h.x;
    const std::size_t n = out.x.size();
    out.log_tail.resize(n);
    out.log_lower.resize(n);
    out.log_upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p1 = std::exp(curve_h.log_tail[i]);
        const double p2 = std::exp(curve_h_half.log_tail[i]);
        double pe = p2 + (p2 - p1) / 3.0;  // leading lattice bias is O(h^2)
        if (!(pe > 0.0)) pe = p2;
        out.log_tail[i] = pe > 0.0 ? std::log(pe) : neg_inf;
        const double lo1 = curve_h.has_brackets() ? curve_h.log_lower[i] : curve_h.log_tail[i];
        const double hi1 = curve_h.has_brackets() ? curve_h.log_upper[i] : curve_h.log_tail[i];
        const double lo2 = curve_h_half.has_brackets() ? curve_h_half.log_lower[i]
                                                       : curve_h_half.log_tail[i];
        const double hi2 = curve_h_half.has_brackets() ? curve_h_half.log_upper[i]
                                                       : curve_h_half.log_tail[i];
        out.log_lower[i] = std::min(lo1, lo2);
        out.log_upper[i] = std::max(hi1, hi2);
    }
    return out;
}

}  // namespace ctails
