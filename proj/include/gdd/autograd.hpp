#pragma once

// Minimal reverse-mode tape over Tensors.
//
// Every op appends a node holding its forward value and a closure that pushes
// the node's gradient back to its parents. Nodes are topologically ordered
// by construction, so backward() is a single reverse sweep.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gdd/fft.hpp"
#include "gdd/ops.hpp"
#include "gdd/tensor.hpp"

namespace gdd::ad {

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

class Tape {
public:
    using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

    Var leaf(Tensor v) { return add_node(std::move(v), true, {}); }
    Var constant(Tensor v) { return add_node(std::move(v), false, {}); }

    /// Append an op node. `needs_grad` is inherited from the parents.
    Var push(Tensor value, std::initializer_list<Var> parents, Backward fn) {
        bool needs = false;
        for (const Var& p : parents) needs = needs || nodes_[p.id].needs_grad;
        return add_node(std::move(value), needs, needs ? std::move(fn) : Backward{});
    }

    Var push(Tensor value, const std::vector<Var>& parents, Backward fn) {
        bool needs = false;
        for (const Var& p : parents) needs = needs || nodes_[p.id].needs_grad;
        return add_node(std::move(value), needs, needs ? std::move(fn) : Backward{});
    }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

    /// Gradient buffer of `v`, allocated as zeros on first use.
    Tensor& grad_buffer(Var v) {
        Node& n = nodes_[v.id];
        if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
        return n.grad;
    }

    /// Accumulated gradient; zeros if nothing reached `v`.
    Tensor grad(Var v) const {
        const Node& n = nodes_[v.id];
        return n.grad.shape() == n.value.shape() ? n.grad : Tensor(n.value.shape());
    }

    void backward(Var out) {
        if (value(out).size() != 1) throw shape_error("backward: output must be a scalar, got " + shape_str(out.shape()));
        grad_buffer(out)[0] += 1.0;
        for (std::size_t i = out.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.grad.shape() != n.value.shape()) continue;
            n.backward(*this, n.grad);
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        Backward backward;
    };

    Var add_node(Tensor v, bool needs, Backward fn) {
        nodes_.push_back(Node{std::move(v), Tensor{}, needs, std::move(fn)});
        return Var{this, nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw shape_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline void require_rank(const Tensor& a, std::size_t r, const char* op) {
    if (a.rank() != r)
        throw shape_error(std::string(op) + ": expected rank " + std::to_string(r) + ", got " + shape_str(a.shape()));
}

} // namespace detail

/// [m x k] * [k x n] -> [m x n]; a rank-1 left operand acts as a row vector
/// and yields a rank-1 result.
inline Var matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if ((A.rank() != 1 && A.rank() != 2) || B.rank() != 2 || A.cols() != B.dim(0))
        throw shape_error("matmul: cannot multiply " + shape_str(A.shape()) + " by " + shape_str(B.shape()));
    const std::size_t m = A.rows(), k = A.cols(), n = B.dim(1);
    Tensor C(A.rank() == 1 ? Shape{n} : Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) C[i * n + j] += av * B(p, j);
        }
    require_finite(C, "matmul");
    return a.tape->push(std::move(C), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B(p, j);
                    ga[i * k + p] += s;
                }
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) gb(p, j) += av * g[i * n + j];
                }
        }
    });
}

inline Var transpose(Var a) {
    detail::require_rank(a.value(), 2, "transpose");
    return a.tape->push(gdd::transpose(a.value()), {a}, [a](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.dim(0); ++i)
            for (std::size_t j = 0; j < g.dim(1); ++j) ga(j, i) += g(i, j);
    });
}

inline Var add(Var a, Var b) {
    detail::require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        for (Var p : {a, b})
            if (t.needs_grad(p)) {
                Tensor& gp = t.grad_buffer(p);
                for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
            }
    });
}

inline Var sub(Var a, Var b) {
    detail::require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

/// Adds vector `b` to every row of `x` (or to `x` itself when rank 1).
inline Var add_bias(Var x, Var b) {
    const Tensor& X = x.value();
    const Tensor& B = b.value();
    if (B.rank() != 1 || X.cols() != B.size())
        throw shape_error("add_bias: bias " + shape_str(B.shape()) + " does not fit " + shape_str(X.shape()));
    Tensor out = X;
    const std::size_t n = B.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i % n];
    return x.tape->push(std::move(out), {x, b}, [x, b, n](Tape& t, const Tensor& g) {
        if (t.needs_grad(x)) {
            Tensor& gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
        }
    });
}

/// Subtracts vector `b` from every row of `x`.
inline Var sub_bias(Var x, Var b) {
    const Tensor& X = x.value();
    const Tensor& B = b.value();
    if (B.rank() != 1 || X.cols() != B.size())
        throw shape_error("sub_bias: vector " + shape_str(B.shape()) + " does not fit " + shape_str(X.shape()));
    Tensor out = X;
    const std::size_t n = B.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i % n];
    return x.tape->push(std::move(out), {x, b}, [x, b, n](Tape& t, const Tensor& g) {
        if (t.needs_grad(x)) {
            Tensor& gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] -= g[i];
        }
    });
}

inline Var scale(Var a, double c) {
    Tensor out = a.value();
    for (double& v : out.data()) v *= c;
    return a.tape->push(std::move(out), {a}, [a, c](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
}

/// Element-wise product.
inline Var mul(Var a, Var b) {
    detail::require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.needs_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            const Tensor& B = t.value(b);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
        }
        if (t.needs_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            const Tensor& A = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
        }
    });
}

/// Row i of `x` scaled by s[i].
inline Var scale_rows(Var s, Var x) {
    const Tensor& S = s.value();
    const Tensor& X = x.value();
    if (S.rank() != 1 || X.rank() != 2 || S.size() != X.dim(0))
        throw shape_error("scale_rows: " + shape_str(S.shape()) + " cannot scale rows of " + shape_str(X.shape()));
    Tensor out = X;
    const std::size_t d = X.dim(1);
    for (std::size_t i = 0; i < X.dim(0); ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) *= S[i];
    return x.tape->push(std::move(out), {s, x}, [s, x, d](Tape& t, const Tensor& g) {
        const Tensor& S = t.value(s);
        const Tensor& X = t.value(x);
        if (t.needs_grad(s)) {
            Tensor& gs = t.grad_buffer(s);
            for (std::size_t i = 0; i < S.size(); ++i)
                for (std::size_t j = 0; j < d; ++j) gs[i] += g(i, j) * X(i, j);
        }
        if (t.needs_grad(x)) {
            Tensor& gx = t.grad_buffer(x);
            for (std::size_t i = 0; i < S.size(); ++i)
                for (std::size_t j = 0; j < d; ++j) gx(i, j) += g(i, j) * S[i];
        }
    });
}

inline Var relu(Var a) {
    return a.tape->push(gdd::relu(a.value()), {a}, [a](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (A[i] > 0.0) ga[i] += g[i];
    });
}

inline Var softplus(Var a) {
    return a.tape->push(gdd::softplus(a.value()), {a}, [a](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid(A[i]);
    });
}

/// Softmax over the last axis.
inline Var softmax(Var a) {
    Tensor y = gdd::softmax(a.value());
    return a.tape->push(y, {a}, [a, y](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_buffer(a);
        const std::size_t n = y.cols();
        for (std::size_t r = 0; r < y.size() / n; ++r) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += y[r * n + i] * g[r * n + i];
            for (std::size_t i = 0; i < n; ++i) ga[r * n + i] += y[r * n + i] * (g[r * n + i] - dot);
        }
    });
}

/// Log-softmax of a vector, computed with log-sum-exp so it never reaches -inf
/// for finite input.
inline Var log_softmax(Var a) {
    const Tensor& A = a.value();
    detail::require_rank(A, 1, "log_softmax");
    if (A.size() == 0) throw value_error("log_softmax: empty input");
    double mx = A[0];
    for (double v : A.data()) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : A.data()) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    Tensor out = A;
    for (double& v : out.data()) v -= lse;
    Tensor p = out;
    for (double& v : p.data()) v = std::exp(v);
    return a.tape->push(std::move(out), {a}, [a, p](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad_buffer(a);
        double gs = 0.0;
        for (double v : g.data()) gs += v;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - p[i] * gs;
    });
}

inline Var sum_rows(Var x) {
    const Tensor& X = x.value();
    detail::require_rank(X, 2, "sum_rows");
    const std::size_t n = X.dim(0), d = X.dim(1);
    Tensor out({d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j] += X(i, j);
    return x.tape->push(std::move(out), {x}, [x, n, d](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gx(i, j) += g[j];
    });
}

inline Var mean_rows(Var x) {
    detail::require_rank(x.value(), 2, "mean_rows");
    const std::size_t n = x.value().dim(0);
    if (n == 0) throw value_error("mean_rows: no rows");
    return scale(sum_rows(x), 1.0 / static_cast<double>(n));
}

/// Rows `idx` of `x` stacked in order; the backward pass scatter-adds, so
/// rows never selected receive exactly zero gradient.
inline Var gather_rows(Var x, std::vector<std::size_t> idx) {
    const Tensor& X = x.value();
    detail::require_rank(X, 2, "gather_rows");
    const std::size_t d = X.dim(1);
    Tensor out({idx.size(), d});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= X.dim(0))
            throw value_error("gather_rows: row " + std::to_string(idx[r]) + " out of range for " + shape_str(X.shape()));
        for (std::size_t j = 0; j < d; ++j) out(r, j) = X(idx[r], j);
    }
    return x.tape->push(std::move(out), {x}, [x, idx = std::move(idx), d](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < d; ++j) gx(idx[r], j) += g(r, j);
    });
}

/// Concatenation of rank-1 vars.
inline Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw value_error("concat: nothing to concatenate");
    std::vector<double> data;
    for (const Var& p : parts) {
        detail::require_rank(p.value(), 1, "concat");
        data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    }
    return parts.front().tape->push(Tensor::vector(std::move(data)), parts, [parts](Tape& t, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t n = t.value(p).size();
            if (t.needs_grad(p)) {
                Tensor& gp = t.grad_buffer(p);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

/// Column-wise concatenation of matrices with equal row counts.
inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw value_error("concat_cols: nothing to concatenate");
    const std::size_t rows = parts.front().value().rank() == 2 ? parts.front().value().dim(0) : 0;
    std::size_t width = 0;
    for (const Var& p : parts) {
        detail::require_rank(p.value(), 2, "concat_cols");
        if (p.value().dim(0) != rows) throw shape_error("concat_cols: row counts differ");
        width += p.value().dim(1);
    }
    Tensor out({rows, width});
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& P = p.value();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < P.dim(1); ++j) out(i, off + j) = P(i, j);
        off += P.dim(1);
    }
    return parts.front().tape->push(std::move(out), parts, [parts](Tape& t, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t w = t.value(p).dim(1);
            if (t.needs_grad(p)) {
                Tensor& gp = t.grad_buffer(p);
                for (std::size_t i = 0; i < gp.dim(0); ++i)
                    for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, off + j);
            }
            off += w;
        }
    });
}

inline Var slice_cols(Var x, std::size_t offset, std::size_t len) {
    const Tensor& X = x.value();
    detail::require_rank(X, 2, "slice_cols");
    if (offset + len > X.dim(1)) throw shape_error("slice_cols: slice out of range for " + shape_str(X.shape()));
    const std::size_t n = X.dim(0);
    Tensor out({n, len});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < len; ++j) out(i, j) = X(i, offset + j);
    return x.tape->push(std::move(out), {x}, [x, offset, len, n](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < len; ++j) gx(i, offset + j) += g(i, j);
    });
}

inline Var reshape(Var x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return x.tape->push(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

/// Element i as a [1] tensor.
inline Var pick(Var x, std::size_t i) {
    if (i >= x.value().size()) throw value_error("pick: index out of range");
    return x.tape->push(Tensor::vector({x.value()[i]}), {x}, [x, i](Tape& t, const Tensor& g) {
        t.grad_buffer(x)[i] += g[0];
    });
}

inline Var sum(Var x) {
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return x.tape->push(Tensor::vector({s}), {x}, [x](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (double& v : gx.data()) v += g[0];
    });
}

inline Var sum_squares(Var x) {
    double s = 0.0;
    for (double v : x.value().data()) s += v * v;
    return x.tape->push(Tensor::vector({s}), {x}, [x](Tape& t, const Tensor& g) {
        const Tensor& X = t.value(x);
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < X.size(); ++i) gx[i] += 2.0 * X[i] * g[0];
    });
}

/// Row-wise circular correlation psi(a_i, b_i) computed with the FFT.
/// Accepts equal-shape vectors or matrices.
inline Var circ_corr(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.shape() != B.shape())
        throw shape_error("circ_corr: operands " + shape_str(A.shape()) + " and " + shape_str(B.shape()) + " differ");
    const std::size_t d = A.cols();
    const std::size_t rows = d ? A.size() / d : 0;
    Tensor out(A.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const auto v = fft::correlate(A.data().subspan(r * d, d), B.data().subspan(r * d, d));
        std::copy(v.begin(), v.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    require_finite(out, "circ_corr");
    // d/da_i = sum_k g_k b_{i+k} = corr(g, b);  d/db_j = sum_k g_k a_{j-k} = conv(a, g)
    return a.tape->push(std::move(out), {a, b}, [a, b, d, rows](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto gr = g.data().subspan(r * d, d);
            if (t.needs_grad(a)) {
                const auto v = fft::correlate(gr, B.data().subspan(r * d, d));
                Tensor& ga = t.grad_buffer(a);
                for (std::size_t i = 0; i < d; ++i) ga[r * d + i] += v[i];
            }
            if (t.needs_grad(b)) {
                const auto v = fft::convolve(A.data().subspan(r * d, d), gr);
                Tensor& gb = t.grad_buffer(b);
                for (std::size_t i = 0; i < d; ++i) gb[r * d + i] += v[i];
            }
        }
    });
}

} // namespace gdd::ad
