#include "periodica/tokenizer.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <mutex>

namespace periodica {

std::pair<std::vector<double>, NormRecord> revin_normalize(
    const std::vector<double>& x, double eps) {
    if (x.size() < 2) throw InsufficientHistory("revin_normalize: need length >= 2");
    NormRecord rec;
    rec.eps = eps;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    rec.mean = mean;
    rec.std = std::max(std::sqrt(var), eps);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / rec.std;
    return {std::move(out), rec};
}

std::vector<double> revin_denormalize(const std::vector<double>& y,
                                      const NormRecord& rec) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * rec.std + rec.mean;
    return out;
}

PatchGrid patchify(const std::vector<double>& x, std::size_t p) {
    if (p == 0) throw InvalidDimension("patchify: cycle length must be >= 1");
    if (x.size() < 2 * p) {
        throw InsufficientHistory("patchify: need at least two full patches");
    }
    PatchGrid grid;
    grid.cycle_length = p;
    grid.n_patches = x.size() / p;
    grid.dropped_prefix = x.size() - grid.n_patches * p;
    grid.patches = Matrix(grid.n_patches, p);
    for (std::size_t i = 0; i < grid.n_patches; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            grid.patches(i, j) = x[grid.dropped_prefix + i * p + j];
        }
    }
    return grid;
}

Matrix resize_transform(std::size_t ref, std::size_t target, ResizeMode mode) {
    if (ref == 0 || target == 0) {
        throw InvalidDimension("resize_transform: sizes must be >= 1");
    }
    if (target == ref) return identity(ref);  // A = I, delta = 1 in both modes
    Matrix a = interp_matrix(ref, target);    // ref x target
    if (mode == ResizeMode::linear) return transpose(a);
    double delta = std::sqrt(static_cast<double>(ref) / static_cast<double>(target));
    return scale(pinv(a), 1.0 / delta);
}

Matrix flex_resize(const Matrix& theta, std::size_t target, ResizeMode mode) {
    if (target == theta.rows()) return theta;
    return matmul(resize_transform(theta.rows(), target, mode), theta);
}

Matrix embed_patches(const PatchGrid& grid, const FlexWeights& w, ResizeMode mode) {
    Matrix proj = flex_resize(w.theta_e, grid.cycle_length, mode);
    if (grid.patches.cols() != proj.rows()) {
        throw InvalidDimension("embed_patches: cycle length does not match resize target");
    }
    return matmul(grid.patches, proj);
}

std::vector<double> unembed_tokens(const Matrix& z, const FlexWeights& w,
                                   std::size_t p, std::size_t horizon,
                                   ResizeMode mode) {
    std::size_t k = (horizon + p - 1) / p;
    if (z.rows() != k) {
        throw InvalidDimension("unembed_tokens: token count must be ceil(F/P)");
    }
    Matrix proj = flex_resize(w.theta_d, p, mode);  // P x D
    Matrix patches_out = matmul_nt(z, proj);        // K x P
    std::vector<double> out(horizon);
    for (std::size_t i = 0; i < horizon; ++i) out[i] = patches_out.raw()[i];
    return out;
}

const Matrix& ResizeCache::get(std::size_t ref, std::size_t target, ResizeMode mode) {
    Key key{ref, target, static_cast<int>(mode)};
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    Matrix r = resize_transform(ref, target, mode);
    std::unique_lock lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(r));
    (void)inserted;
    return it->second;
}

void ResizeCache::clear() {
    std::unique_lock lock(mutex_);
    cache_.clear();
}

} // namespace periodica
