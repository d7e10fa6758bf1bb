#ifndef PERIODICA_TOKENIZER_HPP
#define PERIODICA_TOKENIZER_HPP

#include "periodica/matrix.hpp"

#include <cstddef>
#include <map>
#include <shared_mutex>
#include <utility>
#include <vector>

namespace periodica {

enum class ResizeMode { flex, linear };

/// Per-window instance-normalization statistics.
struct NormRecord {
    double mean = 0.0;
    double std = 1.0;
    double eps = 1e-5;
};

struct PatchGrid {
    Matrix patches;               // N x P, row i = i-th oldest patch
    std::size_t cycle_length = 0; // P
    std::size_t n_patches = 0;    // N
    std::size_t dropped_prefix = 0;
};

struct FlexWeights {
    Matrix theta_e;  // P* x D input projection
    Matrix theta_d;  // P* x D output projection
    std::size_t reference_size = 48;  // P*
};

/// Zero mean, unit population std (std clamped below by eps).
std::pair<std::vector<double>, NormRecord> revin_normalize(
    const std::vector<double>& x, double eps = 1e-5);

std::vector<double> revin_denormalize(const std::vector<double>& y,
                                      const NormRecord& rec);

/// Non-overlapping period patches anchored at the most recent point; the
/// L - N*P oldest points are discarded.
PatchGrid patchify(const std::vector<double>& x, std::size_t p);

/// The resize transform R (target x ref) applied on the left of theta.
/// flex:   R = delta^{-1} * A^+ with A = interp_matrix(ref, target),
///         delta = sqrt(ref/target)
/// linear: R = A^T (plain per-column interpolation, no delta scaling)
Matrix resize_transform(std::size_t ref, std::size_t target, ResizeMode mode);

/// Weight adaptation from reference size P* to target patch length P:
/// resize_transform(P*, P, mode) * theta.
Matrix flex_resize(const Matrix& theta, std::size_t target, ResizeMode mode);

/// tokens = patches (N x P) * flex_resize(theta_e, P, mode)
Matrix embed_patches(const PatchGrid& grid, const FlexWeights& w, ResizeMode mode);

/// patches_out = z * flex_resize(theta_d, p, mode)^T, flattened row-major
/// and truncated to the first `horizon` values. z must be ceil(F/p) x D.
std::vector<double> unembed_tokens(const Matrix& z, const FlexWeights& w,
                                   std::size_t p, std::size_t horizon,
                                   ResizeMode mode);

/// Read-mostly cache of resize transforms keyed by (ref, target, mode).
/// Transforms depend only on integer sizes, never on the weights, so the
/// cache stays valid across training steps.
class ResizeCache {
public:
    ResizeCache() = default;
    // Copies/moves start with an empty cache: entries are cheap to rebuild
    // and the mutex is not transferable.
    ResizeCache(const ResizeCache&) {}
    ResizeCache(ResizeCache&&) noexcept {}
    ResizeCache& operator=(const ResizeCache&) { return *this; }
    ResizeCache& operator=(ResizeCache&&) noexcept { return *this; }

    const Matrix& get(std::size_t ref, std::size_t target, ResizeMode mode);
    void clear();

private:
    using Key = std::tuple<std::size_t, std::size_t, int>;
    std::map<Key, Matrix> cache_;
    std::shared_mutex mutex_;
};

} // namespace periodica

#endif
