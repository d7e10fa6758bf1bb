#ifndef PERIODICA_PERIODICITY_HPP
#define PERIODICA_PERIODICITY_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace periodica {

enum class PeriodSource { metadata, fft, fallback };

struct PeriodEstimate {
    std::size_t cycle_length = 0;
    PeriodSource source = PeriodSource::fallback;
    double confidence = 0.0;  // winning amplitude / total non-DC amplitude
};

/**
 * Cycle length from the amplitude spectrum of the mean-removed input.
 *
 * Among frequency bins k >= 1 whose implied period round(L/k) lies in
 * [p_min, p_max], the bin with maximum amplitude wins; ties break toward
 * the larger period. A spectrum entirely below 1e-9 (constant input)
 * falls back to fallback_period (the reference patch size).
 */
PeriodEstimate find_period_fft(const std::vector<double>& x, std::size_t p_min = 2,
                               std::size_t p_max = 0,  // 0 -> floor(L/2)
                               std::size_t fallback_period = 48);

/// Cycle length from sampling metadata: intrinsic_period / sampling_interval.
/// Durations are in arbitrary but identical units (e.g. seconds).
std::size_t cycle_length_from_interval(std::int64_t sampling_interval,
                                       std::int64_t intrinsic_period);

} // namespace periodica

#endif
