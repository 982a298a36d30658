// numerics.hpp — Small shared helpers: least-squares lines, seeding, parallel loops

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace opgap {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double correlation = 0.0;  // Pearson r of the fitted points
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Seed for an independent substream, a pure function of (master, index).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

/// Runs body(i) for i in [0, n). Results must be written to per-index slots so the
/// outcome does not depend on the thread count. threads == 0 picks the default.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

/// Default worker count: OPGAP_THREADS if set, else 1.
std::size_t default_thread_count();

}  // namespace opgap
