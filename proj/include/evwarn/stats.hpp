#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace evwarn {

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;  // sample standard deviation (n-1)
    double min = 0.0;
    double max = 0.0;
};

/// Stats over a sample set. Throws std::invalid_argument on empty input.
/// Median of an even-sized set is the midpoint of the two central values.
SummaryStats summarize_samples(std::span<const double> samples);

/// Fixed-width histogram anchored at zero: bin k covers
/// [k*bin_width, (k+1)*bin_width).
struct Histogram {
    double bin_width = 2.5;
    std::map<long, std::size_t> counts;

    long mode_bin() const;        // lowest bin index on ties
    double bin_lo(long bin) const { return bin * bin_width; }
    double bin_hi(long bin) const { return (bin + 1) * bin_width; }
};

Histogram make_histogram(std::span<const double> samples,
                         double bin_width = 2.5);

}  // namespace evwarn
