#include "compound_tails/distributions.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "compound_tails/errors.hpp"

namespace ctails {

const char* to_string(CountFamily f) {
    switch (f) {
        case CountFamily::degenerate: return "degenerate";
        case CountFamily::geometric: return "geometric";
        case CountFamily::poisson: return "poisson";
        case CountFamily::discretized_weibull: return "discretized_weibull";
        case CountFamily::pareto: return "pareto";
        case CountFamily::mixed_poisson_earthquake: return "mixed_poisson_earthquake";
    }
    return "?";
}

const char* to_string(SeverityFamily f) {
    switch (f) {
        case SeverityFamily::exponential: return "exponential";
        case SeverityFamily::bounded_atoms: return "bounded";
        case SeverityFamily::pareto: return "pareto";
    }
    return "?";
}

std::uint64_t CountModel::n_max(double eps) const {
    if (!(eps > 0)) throw domain_error("n_max: eps must be positive");
    const double le = std::log(eps);
    if (log_tail(0.0) <= le) return 0;
    std::uint64_t hi = 1;
    while (log_tail(static_cast<double>(hi)) > le) {
        if (hi > (std::uint64_t{1} << 62))
            throw numeric_error("n_max: tail does not reach eps", std::exp(log_tail(static_cast<double>(hi))));
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // tail(lo) > eps >= tail(hi)
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (log_tail(static_cast<double>(mid)) > le) lo = mid; else hi = mid;
    }
    return hi;
}

std::uint64_t CountModel::quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw domain_error("quantile: u must be in [0,1)");
    // P[N <= n] >= u  <=>  tail(n) <= 1 - u.
    const double lt = std::log1p(-u);
    if (log_tail(0.0) <= lt) return 0;
    std::uint64_t hi = 1;
    while (log_tail(static_cast<double>(hi)) > lt) {
        if (hi > (std::uint64_t{1} << 62))
            throw numeric_error("quantile: search overflow");
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (log_tail(static_cast<double>(mid)) > lt) lo = mid; else hi = mid;
    }
    return hi;
}

double LatticePMF::mean() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < log_mass.size(); ++k)
        acc += (static_cast<double>(offset + k) * h) * std::exp(log_mass[k]);
    return acc;
}

double LatticePMF::total_mass() const {
    double acc = 0.0;
    for (auto it = log_mass.rbegin(); it != log_mass.rend(); ++it)
        acc += std::exp(*it);
    return acc;
}

double LatticePMF::tail(double x) const {
    double acc = 0.0;
    for (std::size_t k = log_mass.size(); k-- > 0;) {
        if (static_cast<double>(offset + k) * h > x)
            acc += std::exp(log_mass[k]);
        else
            break;
    }
    return acc;
}

// --- counts ----------------------------------------------------------------

CountModel make_discretized_weibull(double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw domain_error("discretized_weibull: beta must be in (0,1)");
    CountModel m;
    m.family = CountFamily::discretized_weibull;
    m.params = {{"beta", beta}};
    m.log_tail = [beta](double x) {
        if (x < 0) return 0.0;
        return -std::pow(std::floor(x) + 1.0, beta);
    };
    m.log_pmf = [beta](std::uint64_t n) {
        const double nb = std::pow(static_cast<double>(n), beta);
        const double nb1 = std::pow(static_cast<double>(n) + 1.0, beta);
        // log(e^{-nb} - e^{-nb1})
        return -nb + std::log(-std::expm1(-(nb1 - nb)));
    };
    m.aux = [beta](double x) { return std::pow(x, 1.0 - beta) / beta; };
    // E[N] = sum_{n>=0} tail(n); terms decay faster than geometric.
    double mean = 0.0;
    for (std::uint64_t n = 0;; ++n) {
        const double t = std::exp(-std::pow(static_cast<double>(n) + 1.0, beta));
        mean += t;
        if (t < 1e-18 * (mean + 1.0)) break;
    }
    m.mean = mean;
    return m;
}

CountModel make_pareto_count(double gamma, double c) {
    if (!(gamma > 0.0) || !(c > 0.0))
        throw domain_error("pareto count: gamma and c must be positive");
    CountModel m;
    m.family = CountFamily::pareto;
    m.params = {{"gamma", gamma}, {"c", c}};
    m.rv_index = gamma;
    m.log_tail = [gamma, c](double x) {
        if (x < 0) return 0.0;
        return gamma * (std::log(c) - std::log(c + std::floor(x) + 1.0));
    };
    m.log_pmf = [gamma, c](std::uint64_t n) {
        const double la = gamma * (std::log(c) - std::log(c + static_cast<double>(n)));
        const double lb = gamma * (std::log(c) - std::log(c + static_cast<double>(n) + 1.0));
        return log_sub(la, lb);
    };
    if (gamma <= 1.0) {
        m.mean = pos_inf;
    } else {
        // E[N] = sum_{n>=0} (c/(c+n+1))^gamma, tail bracketed by the
        // closed-form integral of the summand.
        double acc = 0.0;
        std::uint64_t n = 0;
        const std::uint64_t m_sum = 2000000;
        for (; n < m_sum; ++n)
            acc += std::pow(c / (c + static_cast<double>(n) + 1.0), gamma);
        const double a = c + static_cast<double>(m_sum) + 0.5;  // midpoint remainder
        acc += std::pow(c, gamma) / (gamma - 1.0) * std::pow(a, 1.0 - gamma);
        m.mean = acc;
    }
    return m;
}

CountModel make_geometric_count(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw domain_error("geometric count: p must be in (0,1)");
    CountModel m;
    m.family = CountFamily::geometric;
    m.params = {{"p", p}};
    const double lq = std::log1p(-p);
    m.log_tail = [lq](double x) {
        if (x < 0) return 0.0;
        return (std::floor(x) + 1.0) * lq;
    };
    m.log_pmf = [p, lq](std::uint64_t n) {
        return std::log(p) + static_cast<double>(n) * lq;
    };
    m.mean = (1.0 - p) / p;
    return m;
}

CountModel make_poisson_count(double lambda) {
    if (!(lambda > 0.0)) throw domain_error("poisson count: lambda must be positive");
    CountModel m;
    m.family = CountFamily::poisson;
    m.params = {{"lambda", lambda}};
    const double ll = std::log(lambda);
    auto lpmf = [lambda, ll](std::uint64_t n) {
        return -lambda + static_cast<double>(n) * ll - std::lgamma(static_cast<double>(n) + 1.0);
    };
    m.log_pmf = lpmf;
    // log P[N > x]: sum pmf from floor(x)+1 up; the term ratio
    // lambda/(n+1) < 1 past the mode gives a geometric remainder bound.
    m.log_tail = [lambda, lpmf](double x) {
        if (x < 0) return 0.0;
        std::uint64_t n = static_cast<std::uint64_t>(std::floor(x)) + 1;
        double acc = neg_inf;
        for (;; ++n) {
            const double lp = lpmf(n);
            acc = log_add(acc, lp);
            const double r = lambda / (static_cast<double>(n) + 1.0);
            if (r < 1.0) {
                // remainder <= term * r/(1-r)
                if (lp + std::log(r / (1.0 - r)) < acc + std::log(1e-17)) break;
            }
            if (n > static_cast<std::uint64_t>(lambda) + 100000000ULL)
                throw numeric_error("poisson tail: summation overflow");
        }
        return acc;
    };
    m.mean = lambda;
    return m;
}

CountModel make_degenerate_count(std::uint64_t n0) {
    CountModel m;
    m.family = CountFamily::degenerate;
    m.params = {{"n0", static_cast<double>(n0)}};
    m.log_tail = [n0](double x) {
        if (x < 0) return 0.0;
        return std::floor(x) < static_cast<double>(n0) ? 0.0 : neg_inf;
    };
    m.log_pmf = [n0](std::uint64_t n) { return n == n0 ? 0.0 : neg_inf; };
    m.mean = static_cast<double>(n0);
    return m;
}

namespace {

// P[Pois(mean) > n] = gamma_p(n+1, mean), accurate into deep tails via
// the log-domain series when the direct value underflows.
double log_poisson_tail(double n, double mean) {
    const double p = boost::math::gamma_p(n + 1.0, mean);
    if (p > 1e-280) return std::log(p);
    // series: sum_{k>n} e^{-mean} mean^k / k!
    double k = std::floor(n) + 1.0;
    double lterm = -mean + k * std::log(mean) - std::lgamma(k + 1.0);
    double acc = neg_inf;
    for (int it = 0; it < 100000; ++it) {
        acc = log_add(acc, lterm);
        k += 1.0;
        lterm += std::log(mean) - std::log(k);
        if (lterm < acc - 40.0 && mean / k < 0.9) break;
    }
    return acc;
}

}  // namespace

CountModel make_mixed_poisson_earthquake(double alpha, double scale,
                                         double beta_rate, double lambda_cut) {
    if (!(alpha > 0.0) || !(scale > 0.0) || !(beta_rate > 0.0) || !(lambda_cut > 0.0))
        throw domain_error("mixed poisson: all parameters must be positive");
    CountModel m;
    m.family = CountFamily::mixed_poisson_earthquake;
    m.params = {{"alpha", alpha}, {"scale", scale}, {"beta_rate", beta_rate},
                {"lambda_cut", lambda_cut}};
    m.rv_index = alpha;
    m.eps_declared = 1e-8;

    const double cut = scale * lambda_cut;  // lower support of the energy law

    // E[N] = beta_rate * E[Lambda]
    m.mean = alpha > 1.0 ? beta_rate * alpha / (alpha - 1.0) * cut : pos_inf;

    // Integrals against dF_Lambda on [cut, inf), Pareto with index alpha:
    // substitute lambda = cut * e^u so the density becomes alpha e^{-alpha u} du.
    auto mix_integral = [alpha, cut](const std::function<double(double)>& g,
                                     double rel_tol) {
        using boost::math::quadrature::gauss_kronrod;
        auto integrand = [&](double u) {
            return g(cut * std::exp(u)) * alpha * std::exp(-alpha * u);
        };
        double err = 0.0;
        const double val = gauss_kronrod<double, 31>::integrate(
            integrand, 0.0, pos_inf, 12, rel_tol, &err);
        if (!(err <= rel_tol * std::max(std::abs(val), 1e-300) * 100.0) &&
            err > 1e-14)
            throw numeric_error("mixed poisson quadrature did not converge", err);
        return val;
    };

    const double rel_tol = 1e-8;
    auto pmf_at = [mix_integral, beta_rate, rel_tol](std::uint64_t n) {
        const double nd = static_cast<double>(n);
        return mix_integral(
            [nd, beta_rate](double lam) {
                const double mu = beta_rate * lam;
                return std::exp(-mu + nd * std::log(mu) - std::lgamma(nd + 1.0));
            },
            rel_tol);
    };
    auto tail_at = [mix_integral, beta_rate, rel_tol](double x) {
        const double nd = std::floor(x);
        return mix_integral(
            [nd, beta_rate](double lam) {
                return std::exp(log_poisson_tail(nd, beta_rate * lam));
            },
            rel_tol);
    };

    // Tabulate eagerly: the model stays immutable and thread-safe.
    const std::size_t n_table = 1 << 14;
    auto pmf_table = std::make_shared<std::vector<double>>();
    auto tail_table = std::make_shared<std::vector<double>>();
    pmf_table->reserve(n_table);
    tail_table->reserve(n_table);
    for (std::size_t n = 0; n < n_table; ++n) {
        pmf_table->push_back(pmf_at(n));
        tail_table->push_back(tail_at(static_cast<double>(n)));
    }

    m.log_pmf = [pmf_table](std::uint64_t n) {
        if (n >= pmf_table->size())
            throw numeric_error("mixed poisson: pmf table exhausted",
                                static_cast<double>(n));
        return std::log((*pmf_table)[n]);
    };
    m.log_tail = [tail_table](double x) {
        if (x < 0) return 0.0;
        const std::uint64_t n = static_cast<std::uint64_t>(std::floor(x));
        if (n >= tail_table->size())
            throw numeric_error("mixed poisson: tail table exhausted",
                                static_cast<double>(n));
        return std::log((*tail_table)[n]);
    };
    return m;
}

// --- severities --------------------------------------------------------------

SeverityModel make_severity_exponential(double mu) {
    if (!(mu > 0.0)) throw domain_error("exponential severity: mu must be positive");
    SeverityModel s;
    s.family = SeverityFamily::exponential;
    s.params = {{"mu", mu}};
    s.mu = mu;
    s.sigma2 = mu * mu;
    s.mgf_radius = 1.0 / mu;
    s.moment = [mu](double r) {
        if (r < 1.0) throw domain_error("moment: r must be >= 1");
        return std::pow(mu, r) * std::tgamma(r + 1.0);
    };
    s.log_tail = [mu](double x) { return x <= 0.0 ? 0.0 : -x / mu; };
    s.log_mgf = [mu](double t) {
        if (!(t < 1.0 / mu)) throw domain_error("log_mgf: t outside radius");
        return -std::log1p(-t * mu);
    };
    s.cdf = [mu](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x / mu); };
    s.quantile = [mu](double u) { return -mu * std::log1p(-u); };
    return s;
}

SeverityModel make_severity_bounded(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw domain_error("bounded severity: no atoms");
    double psum = 0.0;
    for (auto& [v, p] : atoms) {
        if (v < 0.0) throw domain_error("bounded severity: negative atom value");
        if (p < 0.0) throw domain_error("bounded severity: negative probability");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9)
        throw domain_error("bounded severity: probabilities must sum to 1");
    std::sort(atoms.begin(), atoms.end());

    SeverityModel s;
    s.family = SeverityFamily::bounded_atoms;
    s.atoms = atoms;
    double mu = 0.0, m2 = 0.0;
    for (auto& [v, p] : atoms) { mu += v * p; m2 += v * v * p; }
    s.mu = mu;
    s.sigma2 = std::max(0.0, m2 - mu * mu);
    s.mgf_radius = pos_inf;
    auto at = std::make_shared<std::vector<std::pair<double, double>>>(atoms);
    s.moment = [at](double r) {
        if (r < 1.0) throw domain_error("moment: r must be >= 1");
        double acc = 0.0;
        for (auto& [v, p] : *at) acc += std::pow(v, r) * p;
        return acc;
    };
    s.log_tail = [at](double x) {
        double acc = 0.0;
        for (auto& [v, p] : *at)
            if (v > x) acc += p;
        return std::log(acc);
    };
    s.log_mgf = [at](double t) {
        double hi = neg_inf;
        for (auto& [v, p] : *at) hi = std::max(hi, t * v + std::log(p));
        double acc = 0.0;
        for (auto& [v, p] : *at) acc += std::exp(t * v + std::log(p) - hi);
        return hi + std::log(acc);
    };
    s.cdf = [at](double x) {
        double acc = 0.0;
        for (auto& [v, p] : *at)
            if (v <= x) acc += p;
        return acc;
    };
    s.quantile = [at](double u) {
        double acc = 0.0;
        for (auto& [v, p] : *at) {
            acc += p;
            if (acc >= u) return v;
        }
        return at->back().first;
    };
    return s;
}

SeverityModel make_severity_pareto(double beta_index, double x_min) {
    if (!(beta_index > 1.0))
        throw domain_error("pareto severity: beta_index must exceed 1 (finite mean)");
    if (!(x_min > 0.0)) throw domain_error("pareto severity: x_min must be positive");
    SeverityModel s;
    s.family = SeverityFamily::pareto;
    s.params = {{"beta_index", beta_index}, {"x_min", x_min}};
    const double b = beta_index;
    s.mu = b * x_min / (b - 1.0);
    s.sigma2 = b > 2.0
                   ? b * x_min * x_min / (b - 2.0) - s.mu * s.mu
                   : pos_inf;
    s.mgf_radius = 0.0;
    s.moment = [b, x_min](double r) {
        if (r < 1.0) throw domain_error("moment: r must be >= 1");
        return r < b ? b * std::pow(x_min, r) / (b - r) : pos_inf;
    };
    s.log_tail = [b, x_min](double x) {
        return x <= x_min ? 0.0 : b * (std::log(x_min) - std::log(x));
    };
    s.log_mgf = [b, x_min](double t) {
        if (t == 0.0) return 0.0;
        if (t > 0.0) throw domain_error("pareto severity: mgf diverges for t > 0");
        using boost::math::quadrature::gauss_kronrod;
        auto integrand = [b, x_min, t](double x) {
            return std::exp(t * x) * b * std::pow(x_min / x, b) / x;
        };
        double err = 0.0;
        const double val = gauss_kronrod<double, 31>::integrate(
            integrand, x_min, pos_inf, 12, 1e-10, &err);
        return std::log(val);
    };
    s.cdf = [b, x_min](double x) {
        return x <= x_min ? 0.0 : -std::expm1(b * (std::log(x_min) - std::log(x)));
    };
    s.quantile = [b, x_min](double u) {
        return x_min * std::pow(1.0 - u, -1.0 / b);
    };
    return s;
}

SeverityModel scale_severity(const SeverityModel& sev, double c) {
    if (!(c > 0.0)) throw domain_error("scale_severity: factor must be positive");
    SeverityModel s = sev;
    s.mu = sev.mu * c;
    s.sigma2 = sev.sigma2 * c * c;
    s.mgf_radius = sev.mgf_radius / c;
    s.moment = [inner = sev.moment, c](double r) { return std::pow(c, r) * inner(r); };
    s.log_tail = [inner = sev.log_tail, c](double x) { return inner(x / c); };
    s.log_mgf = [inner = sev.log_mgf, c](double t) { return inner(t * c); };
    s.cdf = [inner = sev.cdf, c](double x) { return inner(x / c); };
    s.quantile = [inner = sev.quantile, c](double u) { return c * inner(u); };
    for (auto& [v, p] : s.atoms) v *= c;
    return s;
}

// --- discretizer ------------------------------------------------------------

LatticePMF discretize_severity(const SeverityModel& severity, double h,
                               DiscretizeMode mode, double eps_lat,
                               std::size_t max_cells) {
    if (!(h > 0.0)) throw domain_error("discretize_severity: h must be positive");
    LatticePMF out;
    out.h = h;
    out.offset = 0;

    if (!severity.atoms.empty()) {
        std::size_t top = 0;
        std::vector<std::pair<std::size_t, double>> cells;
        for (auto& [v, p] : severity.atoms) {
            double kd = 0.0;
            switch (mode) {
                case DiscretizeMode::floor: kd = std::floor(v / h); break;
                case DiscretizeMode::round: kd = std::floor(v / h + 0.5); break;
                case DiscretizeMode::upper: kd = std::ceil(v / h); break;
            }
            const std::size_t k = static_cast<std::size_t>(kd);
            if (k >= max_cells)
                throw numeric_error("discretize_severity: atom beyond cell budget",
                                    static_cast<double>(k));
            cells.emplace_back(k, p);
            top = std::max(top, k);
        }
        out.log_mass.assign(top + 1, neg_inf);
        for (auto& [k, p] : cells)
            out.log_mass[k] = log_add(out.log_mass[k], std::log(p));
        return out;
    }

    // Continuous law: cell probabilities from cdf differences. Cell k holds
    // [kh,(k+1)h) for floor, ((k-1)h,kh] for upper, [(k-1/2)h,(k+1/2)h) for round.
    auto cell_bounds = [h, mode](std::size_t k) {
        const double kd = static_cast<double>(k);
        switch (mode) {
            case DiscretizeMode::floor: return std::pair{kd * h, (kd + 1.0) * h};
            case DiscretizeMode::upper: return std::pair{(kd - 1.0) * h, kd * h};
            default: return std::pair{(kd - 0.5) * h, (kd + 0.5) * h};
        }
    };

    out.log_mass.reserve(4096);
    for (std::size_t k = 0;; ++k) {
        auto [lo, hi] = cell_bounds(k);
        const double p = severity.cdf(hi) - severity.cdf(lo);  // cdf(neg) = 0
        out.log_mass.push_back(p > 0.0 ? std::log(p) : neg_inf);
        const double acc_tail = 1.0 - severity.cdf(hi);
        if (acc_tail <= eps_lat) break;
        if (k + 1 >= max_cells)
            throw numeric_error(
                "discretize_severity: tail mass beyond lattice truncation "
                "exceeds eps_lat",
                acc_tail);
    }
    return out;
}

double count_mean_excess(const CountModel& count, double x, double rel_tol,
                         std::uint64_t n_cap) {
    const double lt = count.log_tail(x);
    if (lt == neg_inf) throw domain_error("count_mean_excess: tail(x) = 0");
    const double tail_x = std::exp(lt);

    // E[(N-x)+] = (ceil(x)-x) * tail(x) + sum_{k>=ceil(x)} tail(k);
    // block doubling with a geometric remainder estimate.
    const double cx = std::ceil(x);
    double acc = (cx - x) * tail_x;
    std::uint64_t k = static_cast<std::uint64_t>(cx);
    double prev_block = -1.0;
    double achieved = pos_inf;
    std::uint64_t block_len = 64;
    while (k < n_cap) {
        double block = 0.0;
        const std::uint64_t end = k + block_len;
        for (; k < end; ++k)
            block += std::exp(count.log_tail(static_cast<double>(k)));
        acc += block;
        if (prev_block > 0.0 && block < prev_block) {
            const double r = block / prev_block;
            const double remainder = block * r / (1.0 - r);
            achieved = remainder / acc;
            if (achieved < rel_tol) return acc / tail_x;
        }
        prev_block = block;
        block_len += block_len / 2;
    }
    throw numeric_error("count_mean_excess: truncation tolerance unreachable",
                        achieved);
}

}  // namespace ctails
