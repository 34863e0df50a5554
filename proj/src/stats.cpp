#include "evwarn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evwarn {

SummaryStats summarize_samples(std::span<const double> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("summarize_samples: empty sample set");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    SummaryStats s;
    s.n = sorted.size();
    s.min = sorted.front();
    s.max = sorted.back();
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
             static_cast<double>(s.n);
    s.median = (s.n % 2 == 1)
                   ? sorted[s.n / 2]
                   : 0.5 * (sorted[s.n / 2 - 1] + sorted[s.n / 2]);
    if (s.n > 1) {
        double sq = 0.0;
        for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(s.n - 1));
    }
    return s;
}

long Histogram::mode_bin() const {
    long best = 0;
    std::size_t best_count = 0;
    for (const auto& [bin, count] : counts) {
        if (count > best_count) {
            best = bin;
            best_count = count;
        }
    }
    return best;
}

Histogram make_histogram(std::span<const double> samples, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("make_histogram: bin width must be positive");
    }
    Histogram h;
    h.bin_width = bin_width;
    for (double v : samples) {
        h.counts[static_cast<long>(std::floor(v / bin_width))]++;
    }
    return h;
}

}  // namespace evwarn
