#ifndef COMPOUND_TAILS_COMPOUND_ENGINE_HPP
#define COMPOUND_TAILS_COMPOUND_ENGINE_HPP

#include <cstddef>
#include <vector>

#include "compound_tails/distributions.hpp"
#include "compound_tails/tail_curve.hpp"

namespace ctails {

struct EngineOptions {
    // Target relative half-width contributed by the block structure.
    double bracket_rel = 5e-3;
    // Memory ceiling for lattice work arrays; exceeding it is a resource
    // error suggesting a coarser h.
    std::size_t memory_budget_bytes = std::size_t{4} << 30;
    // Thread count; 0 = COMPOUND_TAILS_THREADS env or hardware default.
    int threads = 0;
    // Ceiling on exact block boundaries per grid point (wider blocks past it).
    std::size_t max_halo_boundaries = 4096;
};

// Exact (desk-scale) oracle for P[S_N > x] with N independent of the
// claim sizes and the claim-size law given on a lattice.
//
// For each grid x the count range splits into an exactly-evaluated
// window around x/mu plus Chernoff-bounded head and tail regions; the
// returned brackets contain the truth for the lattice law (count
// truncation, block granularity and lattice-span folding all accounted).
// eps_N sets the relative truncation budget (spec of the head/tail
// cutoffs relative to the estimated tail level).
TailCurve exact_compound_tail(const CountModel& count, const LatticePMF& sev_lattice,
                              const std::vector<double>& x_grid, double eps_N,
                              const EngineOptions& opt = {});

// Exact oracle for iid exponential claims with mean mu, independent of N:
// P[S_N > t] = sum_k Poisson(k; t/mu) P[N > k]. Carried wholly in the
// log domain; usable far beyond double-precision tail underflow. The
// Poisson sum covers an adaptively-extended bulk; per-segment bounds on
// the omitted terms are folded into the brackets.
TailCurve poisson_inversion_tail(const CountModel& count,
                                 const std::vector<double>& t_grid, double mu);

// Richardson h->0 extrapolation of two round-mode lattice curves at
// spacings h and h/2 on the same grid; brackets widen to cover both.
TailCurve refine_and_extrapolate(const TailCurve& curve_h,
                                 const TailCurve& curve_h_half);

}  // namespace ctails

#endif
