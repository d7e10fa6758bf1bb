#ifndef PERIODICA_GRADCHECK_HPP
#define PERIODICA_GRADCHECK_HPP

#include "periodica/autodiff.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace periodica {

/// Builds the scalar loss graph from parameter nodes (inserted in order).
using LossBuilder =
    std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>;

/// Compares reverse-mode gradients against central finite differences.
/// Returns the max over all parameter entries of
/// |analytic - fd| / max(1, |analytic|, |fd|).
inline double grad_check(const LossBuilder& loss_fn, std::vector<Matrix> params,
                         double eps = 1e-5) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw InvalidValue("grad_check: eps out of range");

    auto eval = [&](const std::vector<Matrix>& p) {
        Tape tape;
        std::vector<Tape::NodeId> ids;
        ids.reserve(p.size());
        for (const Matrix& m : p) ids.push_back(tape.input(m));
        Tape::NodeId loss = loss_fn(tape, ids);
        double v = tape.value(loss)(0, 0);
        if (!std::isfinite(v)) throw InvalidValue("grad_check: non-finite loss");
        return std::pair<Tape, Tape::NodeId>(std::move(tape), loss);
    };

    auto [tape, loss] = eval(params);
    tape.backward(loss);
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(tape.grad(i));

    double max_err = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            double orig = params[p].raw()[i];
            params[p].raw()[i] = orig + eps;
            auto [tp, lp] = eval(params);
            double f_plus = tp.value(lp)(0, 0);
            params[p].raw()[i] = orig - eps;
            auto [tm, lm] = eval(params);
            double f_minus = tm.value(lm)(0, 0);
            params[p].raw()[i] = orig;

            double fd = (f_plus - f_minus) / (2.0 * eps);
            double ana = analytic[p].raw()[i];
            double denom = std::max({1.0, std::fabs(ana), std::fabs(fd)});
            max_err = std::max(max_err, std::fabs(ana - fd) / denom);
        }
    }
    return max_err;
}

} // namespace periodica

#endif
