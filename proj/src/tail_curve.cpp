#include "compound_tails/tail_curve.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "compound_tails/errors.hpp"

namespace ctails {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::lattice_oracle: return "lattice_oracle";
        case Provenance::poisson_inversion: return "poisson_inversion";
        case Provenance::approximation: return "approximation";
        case Provenance::monte_carlo: return "monte_carlo";
    }
    return "?";
}

namespace {

constexpr double ln10 = 2.302585092994046;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RatioTable compare(const TailCurve& a, const TailCurve& b) {
    if (a.x.size() != b.x.size())
        throw contract_error("compare: curves have different grid sizes");
    for (std::size_t i = 0; i < a.x.size(); ++i)
        if (a.x[i] != b.x[i])
            throw contract_error("compare: grid mismatch at index " + std::to_string(i));

    RatioTable t;
    t.x = a.x;
    const std::size_t n = a.x.size();
    t.prob_ratio.resize(n);
    t.log_tail_ratio.resize(n);
    t.ratio_lower.resize(n);
    t.ratio_upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double la = a.log_tail[i], lb = b.log_tail[i];
        t.prob_ratio[i] = std::exp(la - lb);
        t.log_tail_ratio[i] = lb != 0.0 ? la / lb : std::numeric_limits<double>::quiet_NaN();

        // band: brackets when present, else +-3 SE, else the point value
        double la_lo = la, la_hi = la, lb_lo = lb, lb_hi = lb;
        if (a.has_brackets()) { la_lo = a.log_lower[i]; la_hi = a.log_upper[i]; }
        else if (a.has_se() && a.se[i] > 0.0) {
            const double p = std::exp(la);
            la_lo = std::log(std::max(p - 3.0 * a.se[i], 0.0));
            la_hi = std::log(p + 3.0 * a.se[i]);
        }
        if (b.has_brackets()) { lb_lo = b.log_lower[i]; lb_hi = b.log_upper[i]; }
        else if (b.has_se() && b.se[i] > 0.0) {
            const double p = std::exp(lb);
            lb_lo = std::log(std::max(p - 3.0 * b.se[i], 0.0));
            lb_hi = std::log(p + 3.0 * b.se[i]);
        }
        t.ratio_lower[i] = std::exp(la_lo - lb_hi);
        t.ratio_upper[i] = std::exp(la_hi - lb_lo);
    }
    return t;
}

std::string to_csv(const TailCurve& c) {
    std::ostringstream os;
    os << "x,log10_tail,log10_lower,log10_upper,provenance";
    if (c.has_se()) os << ",stderr";
    os << "\n";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        const double lo = c.has_brackets() ? c.log_lower[i] : c.log_tail[i];
        const double hi = c.has_brackets() ? c.log_upper[i] : c.log_tail[i];
        os << fmt17(c.x[i]) << ',' << fmt17(c.log_tail[i] / ln10) << ','
           << fmt17(lo / ln10) << ',' << fmt17(hi / ln10) << ','
           << (c.name.empty() ? to_string(c.provenance) : c.name);
        if (c.has_se()) os << ',' << fmt17(c.se[i]);
        os << "\n";
    }
    return os.str();
}

std::string to_csv(const RatioTable& t) {
    std::ostringstream os;
    os << "x,prob_ratio,log_tail_ratio,ratio_lower,ratio_upper\n";
    for (std::size_t i = 0; i < t.x.size(); ++i)
        os << fmt17(t.x[i]) << ',' << fmt17(t.prob_ratio[i]) << ','
           << fmt17(t.log_tail_ratio[i]) << ',' << fmt17(t.ratio_lower[i]) << ','
           << fmt17(t.ratio_upper[i]) << "\n";
    return os.str();
}

TailCurve curve_from_csv(const std::string& text) {
    TailCurve c;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line))
        throw contract_error("curve_from_csv: empty input");
    const bool with_se = line.find("stderr") != std::string::npos;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 5)
            throw contract_error("curve_from_csv: malformed row: " + line);
        c.x.push_back(std::strtod(cells[0].c_str(), nullptr));
        c.log_tail.push_back(std::strtod(cells[1].c_str(), nullptr) * ln10);
        c.log_lower.push_back(std::strtod(cells[2].c_str(), nullptr) * ln10);
        c.log_upper.push_back(std::strtod(cells[3].c_str(), nullptr) * ln10);
        c.name = cells[4];
        if (with_se && cells.size() > 5)
            c.se.push_back(std::strtod(cells[5].c_str(), nullptr));
    }
    return c;
}

}  // namespace ctails
