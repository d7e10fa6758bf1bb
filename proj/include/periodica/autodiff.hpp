#ifndef PERIODICA_AUTODIFF_HPP
#define PERIODICA_AUTODIFF_HPP

#include "periodica/matrix.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace periodica {

/**
 * Reverse-mode gradient tape over matrix-valued nodes.
 *
 * Nodes are appended in forward order; every op only references earlier
 * node ids, so walking the node list backwards is a valid reverse
 * topological order. Single-threaded per training step.
 *
 * The primitive set is exactly what the forecasting graph needs, not a
 * general autodiff system.
 */
class Tape {
public:
    using NodeId = std::size_t;

    NodeId input(Matrix value);  // leaf (parameter or constant)

    NodeId matmul(NodeId a, NodeId b);
    NodeId matmul_nt(NodeId a, NodeId b);  // a * b^T
    NodeId add(NodeId a, NodeId b);
    NodeId add_rowvec(NodeId a, NodeId row);  // row (1 x C) added to every row of a
    NodeId mul(NodeId a, NodeId b);           // elementwise
    NodeId scale(NodeId a, double s);
    NodeId scale_rows(NodeId a, std::vector<double> w);  // row i scaled by w[i]
    NodeId softmax_rows(NodeId a);
    NodeId layer_norm_rows(NodeId a, NodeId gain, NodeId bias, double eps = 1e-5);
    NodeId gelu(NodeId a);
    NodeId relu(NodeId a);
    NodeId slice_cols(NodeId a, std::size_t start, std::size_t n);
    NodeId slice_rows(NodeId a, std::size_t start, std::size_t n);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId concat_rows(const std::vector<NodeId>& parts);
    NodeId mean_rows(NodeId a);                 // 1 x C
    NodeId replicate_rows(NodeId a, std::size_t k);  // a is 1 x C
    /// Rotate dimension pairs within each head block by position-dependent
    /// angles. base <= 0 disables the rotation (identity).
    NodeId rope(NodeId a, const std::vector<double>& positions, std::size_t head_dim,
                double base);
    /// Additive causal mask for self-attention scores (strictly upper
    /// triangle set to -inf before softmax). Not differentiable w.r.t. mask.
    NodeId causal_mask(NodeId scores);
    NodeId mse(NodeId pred, Matrix target);  // scalar (1x1)

    const Matrix& value(NodeId id) const { return nodes_[id].value; }
    const Matrix& grad(NodeId id) const { return nodes_[id].grad; }

    /// Seed d(loss)/d(loss) = 1 and propagate adjoints to every node.
    void backward(NodeId loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    NodeId push(Matrix value, std::function<void(Tape&)> back);
    Matrix& grad_mut(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

} // namespace periodica

#endif
