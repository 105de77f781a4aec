#include "fft_conv.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "compound_tails/errors.hpp"

namespace ctails::detail {

double Pmf::sum_in_array() const {
    long double acc = 0.0L;
    for (double v : m) acc += v;
    return static_cast<double>(acc);
}

double Pmf::mean_in_array() const {
    long double acc = 0.0L, tot = 0.0L;
    for (std::size_t i = 0; i < m.size(); ++i) {
        acc += static_cast<long double>(m[i]) * static_cast<long double>(lo + i);
        tot += m[i];
    }
    return tot > 0.0L ? static_cast<double>(acc / tot) : 0.0;
}

void Pmf::trim_zeros() {
    std::size_t a = 0, b = m.size();
    while (a < b && m[a] == 0.0) ++a;
    while (b > a && m[b - 1] == 0.0) --b;
    if (a == 0 && b == m.size()) return;
    std::vector<double> out(m.begin() + static_cast<std::ptrdiff_t>(a),
                            m.begin() + static_cast<std::ptrdiff_t>(b));
    lo += a;
    hi = lo + out.size();
    m = std::move(out);
    if (m.empty()) { lo = hi = 0; }
}

namespace {

// One cached FFTW plan pair per transform size. The planner is not
// thread-safe; execution on distinct buffers is.
struct PlanPair {
    fftw_plan fwd = nullptr, inv = nullptr;
    std::size_t n = 0;
};

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    PlanPair get(std::size_t n) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        double* re = fftw_alloc_real(n);
        fftw_complex* cx = fftw_alloc_complex(n / 2 + 1);
        PlanPair p;
        p.n = n;
        p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), re, cx, FFTW_ESTIMATE);
        p.inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), cx, re, FFTW_ESTIMATE);
        fftw_free(re);
        fftw_free(cx);
        if (!p.fwd || !p.inv) throw resource_error("fftw plan creation failed");
        plans_[n] = p;
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::size_t, PlanPair> plans_;
};

struct FftwDeleter {
    void operator()(double* p) const { fftw_free(p); }
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// result[k] = sum a.m[i] b.m[j] over i+j=k (indices relative to lo's);
// length la+lb-1, written into out.
void conv_direct(const std::vector<double>& a, const std::vector<double>& b,
                 std::vector<double>& out) {
    out.assign(a.size() + b.size() - 1, 0.0);
    if (a.size() < b.size()) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;
            for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
        }
    } else {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double bj = b[j];
            if (bj == 0.0) continue;
            for (std::size_t i = 0; i < a.size(); ++i) out[i + j] += bj * a[i];
        }
    }
}

void conv_fft(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& out) {
    const std::size_t full = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(full);
    PlanPair plan = PlanCache::instance().get(n);

    std::unique_ptr<double, FftwDeleter> ra(fftw_alloc_real(n));
    std::unique_ptr<double, FftwDeleter> rb(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwDeleter> ca(fftw_alloc_complex(n / 2 + 1));
    std::unique_ptr<fftw_complex, FftwDeleter> cb(fftw_alloc_complex(n / 2 + 1));
    if (!ra || !rb || !ca || !cb) throw resource_error("fftw buffer allocation failed");

    std::copy(a.begin(), a.end(), ra.get());
    std::fill(ra.get() + a.size(), ra.get() + n, 0.0);
    std::copy(b.begin(), b.end(), rb.get());
    std::fill(rb.get() + b.size(), rb.get() + n, 0.0);

    fftw_execute_dft_r2c(plan.fwd, ra.get(), ca.get());
    fftw_execute_dft_r2c(plan.fwd, rb.get(), cb.get());
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i <= n / 2; ++i) {
        const double re = ca.get()[i][0] * cb.get()[i][0] - ca.get()[i][1] * cb.get()[i][1];
        const double im = ca.get()[i][0] * cb.get()[i][1] + ca.get()[i][1] * cb.get()[i][0];
        ca.get()[i][0] = re * scale;
        ca.get()[i][1] = im * scale;
    }
    fftw_execute_dft_c2r(plan.inv, ca.get(), ra.get());
    out.assign(ra.get(), ra.get() + full);
    // convolution of nonnegative mass: clip FFT roundoff noise
    for (double& v : out)
        if (v < 0.0) v = 0.0;
}

}  // namespace

Pmf convolve(const Pmf& a, const Pmf& b, std::size_t cap) {
    Pmf out;
    const double cross_beyond = a.beyond + b.beyond - a.beyond * b.beyond;
    if (a.m.empty() || b.m.empty()) {
        out.beyond = cross_beyond;
        return out;
    }

    std::vector<double> full;
    const std::size_t direct_cutoff = 1u << 21;
    if (std::min(a.m.size(), b.m.size()) <= 48 ||
        a.m.size() * b.m.size() <= direct_cutoff)
        conv_direct(a.m, b.m, full);
    else
        conv_fft(a.m, b.m, full);

    const std::size_t base = a.lo + b.lo;
    std::size_t keep = full.size();
    long double folded = 0.0L;
    if (base >= cap) {
        keep = 0;
    } else if (base + full.size() > cap) {
        keep = cap - base;
    }
    for (std::size_t k = keep; k < full.size(); ++k) folded += full[k];
    full.resize(keep);

    out.lo = keep > 0 ? base : 0;
    out.hi = keep > 0 ? base + keep : 0;
    out.m = std::move(full);
    out.beyond = cross_beyond + static_cast<double>(folded);
    out.trim_zeros();
    return out;
}

}  // namespace ctails::detail
