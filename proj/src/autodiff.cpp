#include "periodica/autodiff.hpp"
#include "periodica/errors.hpp"

#include <cmath>
#include <utility>

namespace periodica {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

Tape::NodeId Tape::push(Matrix value, std::function<void(Tape&)> back) {
    Node n;
    n.grad = Matrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Tape::NodeId Tape::input(Matrix value) { return push(std::move(value), {}); }

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Matrix c = periodica::matmul(value(a), value(b));
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad(out);
        t.grad_mut(a) = periodica::add(t.grad(a), periodica::matmul_nt(g, t.value(b)));
        t.grad_mut(b) = periodica::add(t.grad(b), periodica::matmul_tn(t.value(a), g));
    };
    return out;
}

Tape::NodeId Tape::matmul_nt(NodeId a, NodeId b) {
    Matrix c = periodica::matmul_nt(value(a), value(b));
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad(out);
        // c = a b^T : da += g b ; db += g^T a
        t.grad_mut(a) = periodica::add(t.grad(a), periodica::matmul(g, t.value(b)));
        t.grad_mut(b) = periodica::add(t.grad(b), periodica::matmul_tn(g, t.value(a)));
    };
    return out;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    Matrix c = periodica::add(value(a), value(b));
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        t.grad_mut(a) = periodica::add(t.grad(a), t.grad(out));
        t.grad_mut(b) = periodica::add(t.grad(b), t.grad(out));
    };
    return out;
}

Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) {
    const Matrix& av = value(a);
    const Matrix& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw InvalidDimension("add_rowvec: row must be 1 x cols(a)");
    }
    Matrix c = av;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += rv(0, j);
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, row, out](Tape& t) {
        const Matrix& g = t.grad(out);
        t.grad_mut(a) = periodica::add(t.grad(a), g);
        Matrix& gr = t.grad_mut(row);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    };
    return out;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (!av.same_shape(bv)) throw InvalidDimension("mul: shape mismatch");
    Matrix c = av;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] *= bv.raw()[i];
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        Matrix& gb = t.grad_mut(b);
        const Matrix& av2 = t.value(a);
        const Matrix& bv2 = t.value(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.raw()[i] += g.raw()[i] * bv2.raw()[i];
            gb.raw()[i] += g.raw()[i] * av2.raw()[i];
        }
    };
    return out;
}

Tape::NodeId Tape::scale(NodeId a, double s) {
    Matrix c = periodica::scale(value(a), s);
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, s, out](Tape& t) {
        t.grad_mut(a) = periodica::add(t.grad(a), periodica::scale(t.grad(out), s));
    };
    return out;
}

Tape::NodeId Tape::scale_rows(NodeId a, std::vector<double> w) {
    const Matrix& av = value(a);
    if (w.size() != av.rows()) throw InvalidDimension("scale_rows: weight count != rows");
    Matrix c = av;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) *= w[i];
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, w = std::move(w), out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * w[i];
    };
    return out;
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
    Matrix c = value(a);
    for (std::size_t i = 0; i < c.rows(); ++i) {
        double m = c(i, 0);
        for (std::size_t j = 1; j < c.cols(); ++j) m = std::max(m, c(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c.cols(); ++j) {
            c(i, j) = std::exp(c(i, j) - m);
            sum += c(i, j);
        }
        for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) /= sum;
    }
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix& y = t.value(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j)
                ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    };
    return out;
}

Tape::NodeId Tape::layer_norm_rows(NodeId a, NodeId gain, NodeId bias, double eps) {
    const Matrix& av = value(a);
    const Matrix& gv = value(gain);
    const Matrix& bv = value(bias);
    if (gv.rows() != 1 || gv.cols() != av.cols() || bv.rows() != 1 ||
        bv.cols() != av.cols()) {
        throw InvalidDimension("layer_norm_rows: gain/bias must be 1 x cols(a)");
    }
    const std::size_t c = av.cols();
    Matrix y(av.rows(), c);
    std::vector<double> inv_std(av.rows());
    Matrix xhat(av.rows(), c);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += av(i, j);
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            double d = av(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        double inv = 1.0 / std::sqrt(var + eps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < c; ++j) {
            xhat(i, j) = (av(i, j) - mu) * inv;
            y(i, j) = gv(0, j) * xhat(i, j) + bv(0, j);
        }
    }
    NodeId out = push(std::move(y), {});
    nodes_[out].back = [a, gain, bias, out, inv_std = std::move(inv_std),
                        xhat = std::move(xhat)](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix& gv2 = t.value(gain);
        Matrix& ga = t.grad_mut(a);
        Matrix& gg = t.grad_mut(gain);
        Matrix& gb = t.grad_mut(bias);
        const std::size_t c = g.cols();
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                double dxh = g(i, j) * gv2(0, j);
                m1 += dxh;
                m2 += dxh * xhat(i, j);
                gg(0, j) += g(i, j) * xhat(i, j);
                gb(0, j) += g(i, j);
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j) {
                double dxh = g(i, j) * gv2(0, j);
                ga(i, j) += inv_std[i] * (dxh - m1 - xhat(i, j) * m2);
            }
        }
    };
    return out;
}

Tape::NodeId Tape::gelu(NodeId a) {
    Matrix c = value(a);
    for (double& v : c.raw()) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix& x = t.value(a);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double v = x.raw()[i];
            double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            ga.raw()[i] += g.raw()[i] * (cdf + v * pdf);
        }
    };
    return out;
}

Tape::NodeId Tape::relu(NodeId a) {
    Matrix c = value(a);
    for (double& v : c.raw()) v = v > 0.0 ? v : 0.0;
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out](Tape& t) {
        const Matrix& g = t.grad(out);
        const Matrix& x = t.value(a);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (x.raw()[i] > 0.0) ga.raw()[i] += g.raw()[i];
        }
    };
    return out;
}

Tape::NodeId Tape::slice_cols(NodeId a, std::size_t start, std::size_t n) {
    const Matrix& av = value(a);
    if (start + n > av.cols()) throw InvalidDimension("slice_cols: out of range");
    Matrix c(av.rows(), n);
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = av(i, start + j);
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, start, n, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < n; ++j) ga(i, start + j) += g(i, j);
    };
    return out;
}

Tape::NodeId Tape::slice_rows(NodeId a, std::size_t start, std::size_t n) {
    const Matrix& av = value(a);
    if (start + n > av.rows()) throw InvalidDimension("slice_rows: out of range");
    Matrix c(n, av.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) c(i, j) = av(start + i, j);
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, start, n, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(start + i, j) += g(i, j);
    };
    return out;
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw InvalidDimension("concat_cols: empty");
    std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (NodeId p : parts) {
        if (value(p).rows() != rows) throw InvalidDimension("concat_cols: row mismatch");
        cols += value(p).cols();
    }
    Matrix c(rows, cols);
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) c(i, off + j) = pv(i, j);
        off += pv.cols();
    }
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [parts, out](Tape& t) {
        const Matrix& g = t.grad(out);
        std::size_t off = 0;
        for (NodeId p : parts) {
            Matrix& gp = t.grad_mut(p);
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
            off += gp.cols();
        }
    };
    return out;
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw InvalidDimension("concat_rows: empty");
    std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    for (NodeId p : parts) {
        if (value(p).cols() != cols) throw InvalidDimension("concat_rows: col mismatch");
        rows += value(p).rows();
    }
    Matrix c(rows, cols);
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t i = 0; i < pv.rows(); ++i)
            for (std::size_t j = 0; j < cols; ++j) c(off + i, j) = pv(i, j);
        off += pv.rows();
    }
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [parts, out](Tape& t) {
        const Matrix& g = t.grad(out);
        std::size_t off = 0;
        for (NodeId p : parts) {
            Matrix& gp = t.grad_mut(p);
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(off + i, j);
            off += gp.rows();
        }
    };
    return out;
}

Tape::NodeId Tape::mean_rows(NodeId a) {
    const Matrix& av = value(a);
    Matrix c(1, av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) c(0, j) += av(i, j);
    for (double& v : c.raw()) v /= static_cast<double>(av.rows());
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        double inv = 1.0 / static_cast<double>(ga.rows());
        for (std::size_t i = 0; i < ga.rows(); ++i)
            for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(0, j) * inv;
    };
    return out;
}

Tape::NodeId Tape::replicate_rows(NodeId a, std::size_t k) {
    const Matrix& av = value(a);
    if (av.rows() != 1) throw InvalidDimension("replicate_rows: input must be 1 x C");
    Matrix c(k, av.cols());
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) c(i, j) = av(0, j);
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(0, j) += g(i, j);
    };
    return out;
}

Tape::NodeId Tape::rope(NodeId a, const std::vector<double>& positions,
                        std::size_t head_dim, double base) {
    const Matrix& av = value(a);
    if (head_dim == 0 || head_dim % 2 != 0) {
        throw InvalidDimension("rope: head dimension must be even");
    }
    if (av.cols() % head_dim != 0) {
        throw InvalidDimension("rope: cols not a multiple of head_dim");
    }
    if (positions.size() != av.rows()) {
        throw InvalidDimension("rope: one position per row required");
    }
    if (base <= 0.0) {
        // rotation disabled: identity pass-through
        Matrix c = av;
        NodeId out = push(std::move(c), {});
        nodes_[out].back = [a, out](Tape& t) {
            t.grad_mut(a) = periodica::add(t.grad(a), t.grad(out));
        };
        return out;
    }
    std::vector<double> freqs(head_dim / 2);
    for (std::size_t m = 0; m < freqs.size(); ++m) {
        freqs[m] = std::pow(base, -2.0 * static_cast<double>(m) /
                                      static_cast<double>(head_dim));
    }
    Matrix c(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t blk = 0; blk < av.cols(); blk += head_dim) {
            for (std::size_t m = 0; m < head_dim / 2; ++m) {
                double theta = positions[i] * freqs[m];
                double cs = std::cos(theta), sn = std::sin(theta);
                double x = av(i, blk + 2 * m);
                double y = av(i, blk + 2 * m + 1);
                c(i, blk + 2 * m) = x * cs - y * sn;
                c(i, blk + 2 * m + 1) = x * sn + y * cs;
            }
        }
    }
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [a, out, positions, head_dim, freqs = std::move(freqs)](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t blk = 0; blk < g.cols(); blk += head_dim) {
                for (std::size_t m = 0; m < head_dim / 2; ++m) {
                    double theta = positions[i] * freqs[m];
                    double cs = std::cos(theta), sn = std::sin(theta);
                    double gx = g(i, blk + 2 * m);
                    double gy = g(i, blk + 2 * m + 1);
                    // inverse rotation of the adjoint
                    ga(i, blk + 2 * m) += gx * cs + gy * sn;
                    ga(i, blk + 2 * m + 1) += -gx * sn + gy * cs;
                }
            }
        }
    };
    return out;
}

Tape::NodeId Tape::causal_mask(NodeId scores) {
    const Matrix& sv = value(scores);
    if (sv.rows() != sv.cols()) throw InvalidDimension("causal_mask: square scores required");
    Matrix c = sv;
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = i + 1; j < c.cols(); ++j) c(i, j) = -1e30;
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [scores, out](Tape& t) {
        const Matrix& g = t.grad(out);
        Matrix& gs = t.grad_mut(scores);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j <= i; ++j) gs(i, j) += g(i, j);
    };
    return out;
}

Tape::NodeId Tape::mse(NodeId pred, Matrix target) {
    const Matrix& pv = value(pred);
    if (!pv.same_shape(target)) throw InvalidDimension("mse: shape mismatch");
    double n = static_cast<double>(pv.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        double d = pv.raw()[i] - target.raw()[i];
        s += d * d;
    }
    Matrix c(1, 1);
    c(0, 0) = s / n;
    NodeId out = push(std::move(c), {});
    nodes_[out].back = [pred, out, target = std::move(target), n](Tape& t) {
        double g = t.grad(out)(0, 0);
        const Matrix& pv2 = t.value(pred);
        Matrix& gp = t.grad_mut(pred);
        for (std::size_t i = 0; i < pv2.size(); ++i) {
            gp.raw()[i] += g * 2.0 * (pv2.raw()[i] - target.raw()[i]) / n;
        }
    };
    return out;
}

void Tape::backward(NodeId loss) {
    if (value(loss).size() != 1) throw InvalidDimension("backward: loss must be scalar");
    grad_mut(loss)(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this);
    }
}

} // namespace periodica
