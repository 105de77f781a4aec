#ifndef COMPOUND_TAILS_FFT_CONV_HPP
#define COMPOUND_TAILS_FFT_CONV_HPP

#include <cstddef>
#include <vector>

namespace ctails::detail {

// Working pmf on the engine's global cell grid. Cells live in [0, cap);
// the array covers [lo, hi) and is exactly zero outside; `beyond` is the
// mass pushed past the grid cap, i.e. above every query point. Mass is
// linear-domain and nonnegative.
struct Pmf {
    std::size_t lo = 0, hi = 0;
    std::vector<double> m;  // size hi - lo
    double beyond = 0.0;

    static Pmf delta0() { return Pmf{0, 1, {1.0}, 0.0}; }
    double at(std::size_t cell) const {
        return (cell >= lo && cell < hi) ? m[cell - lo] : 0.0;
    }
    double sum_in_array() const;
    double mean_in_array() const;  // of the normalized in-array law
    void trim_zeros();
};

// Linear convolution truncated to `cap` cells. Mass landing at or past
// cap is folded into `beyond`, along with the cross terms from either
// input's beyond mass. Direct convolution for small problems, FFTW
// (power-of-two padded, FFTW_ESTIMATE for deterministic plans) otherwise.
Pmf convolve(const Pmf& a, const Pmf& b, std::size_t cap);

}  // namespace ctails::detail

#endif
