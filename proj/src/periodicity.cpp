#include "periodica/periodicity.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <numbers>

namespace periodica {

PeriodEstimate find_period_fft(const std::vector<double>& x, std::size_t p_min,
                               std::size_t p_max, std::size_t fallback_period) {
    const std::size_t len = x.size();
    if (len < 8) throw InsufficientHistory("find_period_fft: need at least 8 points");
    const std::size_t half = len / 2;
    if (p_max == 0) p_max = half;
    if (p_min < 2 || p_min > p_max || p_max > half) {
        throw InvalidValue("find_period_fft: bounds must satisfy 2 <= p_min <= p_max <= L/2");
    }

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(len);

    // Amplitude spectrum of the mean-removed series, bins 1..L/2. A direct
    // DFT keeps bin semantics exact for arbitrary L; desk-scale lengths make
    // the O(L^2) cost irrelevant.
    const double w0 = 2.0 * std::numbers::pi / static_cast<double>(len);
    std::vector<double> amp(half + 1, 0.0);
    double total = 0.0;
    for (std::size_t k = 1; k <= half; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
            double angle = w0 * static_cast<double>(k) * static_cast<double>(t);
            double v = x[t] - mean;
            re += v * std::cos(angle);
            im -= v * std::sin(angle);
        }
        amp[k] = std::hypot(re, im);
        total += amp[k];
    }

    if (total < 1e-9) {
        PeriodEstimate est;
        est.cycle_length = fallback_period;
        est.source = PeriodSource::fallback;
        est.confidence = 0.0;
        return est;
    }

    std::size_t best_k = 0;
    double best_amp = -1.0;
    for (std::size_t k = 1; k <= half; ++k) {
        auto period = static_cast<std::size_t>(
            std::llround(static_cast<double>(len) / static_cast<double>(k)));
        if (period < p_min || period > p_max) continue;
        // strict > keeps the earlier (smaller k, larger period) bin on ties
        if (amp[k] > best_amp) {
            best_amp = amp[k];
            best_k = k;
        }
    }

    PeriodEstimate est;
    if (best_k == 0) {
        est.cycle_length = fallback_period;
        est.source = PeriodSource::fallback;
        est.confidence = 0.0;
        return est;
    }
    est.cycle_length = static_cast<std::size_t>(
        std::llround(static_cast<double>(len) / static_cast<double>(best_k)));
    est.source = PeriodSource::fft;
    est.confidence = best_amp / total;
    return est;
}

std::size_t cycle_length_from_interval(std::int64_t sampling_interval,
                                       std::int64_t intrinsic_period) {
    if (sampling_interval <= 0 || intrinsic_period <= 0) {
        throw InvalidValue("cycle_length_from_interval: durations must be positive");
    }
    if (intrinsic_period % sampling_interval != 0) {
        throw NonIntegralCycle("cycle_length_from_interval: period not a multiple of interval");
    }
    return static_cast<std::size_t>(intrinsic_period / sampling_interval);
}

} // namespace periodica
