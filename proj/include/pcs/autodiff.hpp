#ifndef PCS_AUTODIFF_HPP
#define PCS_AUTODIFF_HPP

// Minimal reverse-mode differentiation over dense row-major double matrices.
//
// A Graph is an append-only tape: every operation appends a node holding its
// forward value and a closure that pushes the node's gradient to its parents.
// Creation order is a topological order, so backward() walks the tape in
// reverse and visits each node exactly once. Gradients are summed into
// parents, which handles shared subexpressions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pcs/error.hpp"

namespace pcs {

struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != r * c) fail(ErrorKind::usage, "shape-mismatch", "tensor data length does not match shape");
    }
    Tensor(std::size_t r, std::size_t c, std::initializer_list<double> values)
        : Tensor(r, c, std::vector<double>(values)) {}

    static Tensor scalar(double v) { return Tensor(1, 1, v); }

    std::size_t size() const noexcept { return data.size(); }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double item() const { return data.at(0); }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
    }

    std::string shape_string() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

namespace ad_detail {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
inline Eigen::Map<const RowMat> view(const Tensor& t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}
inline Eigen::Map<RowMat> view(Tensor& t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}
} // namespace ad_detail

class Graph;

/// Handle to a node of a Graph.
struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
};

class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor value, bool requires_grad = true) { return push(std::move(value), requires_grad, nullptr); }
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    /// Appends an operation node. `parents` decide whether it needs a gradient.
    Var op(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
        bool needs = false;
        for (const Var& p : parents) needs = needs || nodes_[p.id].requires_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
    }

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient of the last backward() target with respect to node `id`
    /// (zeros when no gradient reached it).
    const Tensor& grad(std::size_t id) {
        ensure_grad(id);
        return nodes_[id].grad;
    }

    /// Mutable gradient buffer, allocated on first use. For backward closures.
    Tensor& grad_buffer(std::size_t id) {
        ensure_grad(id);
        return nodes_[id].grad;
    }


    void backward(Var target) {
        const Tensor& v = nodes_[target.id].value;
        if (v.rows != 1 || v.cols != 1)
            fail(ErrorKind::usage, "shape-mismatch", "backward target must be 1x1, got " + v.shape_string());
        for (auto& n : nodes_) n.grad = Tensor();
        grad_buffer(target.id).data[0] = 1.0;
        for (std::size_t id = target.id + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.backward && !n.grad.data.empty()) n.backward(*this, id);
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    Var push(Tensor value, bool requires_grad, BackwardFn backward) {
        nodes_.push_back({std::move(value), Tensor(), requires_grad, std::move(backward)});
        return {this, nodes_.size() - 1};
    }

    void ensure_grad(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.data.size() != n.value.data.size() || n.grad.rows != n.value.rows)
            n.grad = Tensor(n.value.rows, n.value.cols, 0.0);
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph->value(id); }
inline const Tensor& Var::grad() const { return graph->grad(id); }

namespace ad_detail {

[[noreturn]] inline void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    fail(ErrorKind::usage, "shape-mismatch", std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
}

inline void same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) shape_error(op, a, b);
}

// Adds `delta` into the parent's gradient if the parent participates.
inline void accumulate(Graph& g, Var parent, const Tensor& delta) {
    if (!g.requires_grad(parent.id)) return;
    Tensor& gr = g.grad_buffer(parent.id);
    for (std::size_t i = 0; i < gr.data.size(); ++i) gr.data[i] += delta.data[i];
}

template <class Fn>
Var unary(Var a, Fn&& f, std::function<double(double x, double y)> dfdx) {
    Graph& g = *a.graph;
    const Tensor& x = a.value();
    Tensor y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
    return g.op(std::move(y), {a}, [a, dfdx = std::move(dfdx)](Graph& gr, std::size_t self) {
        const Tensor& x = gr.value(a.id);
        const Tensor& y = gr.value(self);
        const Tensor& gy = gr.grad_buffer(self);
        if (!gr.requires_grad(a.id)) return;
        Tensor& gx = gr.grad_buffer(a.id);
        for (std::size_t i = 0; i < x.size(); ++i) gx.data[i] += gy.data[i] * dfdx(x.data[i], y.data[i]);
    });
}

} // namespace ad_detail

// ---------------------------------------------------------------- linear algebra

inline Var matmul(Var a, Var b) {
    using namespace ad_detail;
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols != B.rows) shape_error("matmul", A, B);
    Tensor C(A.rows, B.cols);
    view(C).noalias() = view(A) * view(B);
    return a.graph->op(std::move(C), {a, b}, [a, b](Graph& g, std::size_t self) {
        const Tensor& G = g.grad_buffer(self);
        if (g.requires_grad(a.id)) view(g.grad_buffer(a.id)).noalias() += view(G) * view(g.value(b.id)).transpose();
        if (g.requires_grad(b.id)) view(g.grad_buffer(b.id)).noalias() += view(g.value(a.id)).transpose() * view(G);
    });
}

inline Var add(Var a, Var b) {
    using namespace ad_detail;
    same_shape("add", a.value(), b.value());
    Tensor c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += b.value().data[i];
    return a.graph->op(std::move(c), {a, b}, [a, b](Graph& g, std::size_t self) {
        const Tensor gy = g.grad_buffer(self);
        accumulate(g, a, gy);
        accumulate(g, b, gy);
    });
}

inline Var sub(Var a, Var b) {
    using namespace ad_detail;
    same_shape("sub", a.value(), b.value());
    Tensor c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] -= b.value().data[i];
    return a.graph->op(std::move(c), {a, b}, [a, b](Graph& g, std::size_t self) {
        Tensor gy = g.grad_buffer(self);
        accumulate(g, a, gy);
        for (auto& v : gy.data) v = -v;
        accumulate(g, b, gy);
    });
}

/// Elementwise product.
inline Var hadamard(Var a, Var b) {
    using namespace ad_detail;
    same_shape("hadamard", a.value(), b.value());
    Tensor c = a.value();
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= b.value().data[i];
    return a.graph->op(std::move(c), {a, b}, [a, b](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        if (g.requires_grad(a.id)) {
            Tensor& ga = g.grad_buffer(a.id);
            const Tensor& bv = g.value(b.id);
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += gy.data[i] * bv.data[i];
        }
        if (g.requires_grad(b.id)) {
            Tensor& gb = g.grad_buffer(b.id);
            const Tensor& av = g.value(a.id);
            for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += gy.data[i] * av.data[i];
        }
    });
}

inline Var scalar_mul(Var a, double s) {
    Tensor c = a.value();
    for (auto& v : c.data) v *= s;
    return a.graph->op(std::move(c), {a}, [a, s](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += s * gy.data[i];
    });
}

/// Adds a 1 x cols row to every row of `a`.
inline Var add_bias(Var a, Var bias) {
    using namespace ad_detail;
    const Tensor& A = a.value();
    const Tensor& b = bias.value();
    if (b.rows != 1 || b.cols != A.cols) shape_error("add_bias", A, b);
    Tensor c = A;
    for (std::size_t r = 0; r < c.rows; ++r)
        for (std::size_t k = 0; k < c.cols; ++k) c(r, k) += b.data[k];
    return a.graph->op(std::move(c), {a, bias}, [a, bias](Graph& g, std::size_t self) {
        const Tensor gy = g.grad_buffer(self);
        accumulate(g, a, gy);
        if (g.requires_grad(bias.id)) {
            Tensor& gb = g.grad_buffer(bias.id);
            for (std::size_t r = 0; r < gy.rows; ++r)
                for (std::size_t k = 0; k < gy.cols; ++k) gb.data[k] += gy(r, k);
        }
    });
}

inline Var transpose(Var a) {
    const Tensor& A = a.value();
    Tensor t(A.cols, A.rows);
    for (std::size_t r = 0; r < A.rows; ++r)
        for (std::size_t c = 0; c < A.cols; ++c) t(c, r) = A(r, c);
    return a.graph->op(std::move(t), {a}, [a](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t r = 0; r < ga.rows; ++r)
            for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) += gy(c, r);
    });
}

inline Var concat_cols(Var a, Var b) {
    using namespace ad_detail;
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.rows != B.rows) shape_error("concat_cols", A, B);
    Tensor c(A.rows, A.cols + B.cols);
    for (std::size_t r = 0; r < A.rows; ++r) {
        std::copy_n(&A.data[r * A.cols], A.cols, &c.data[r * c.cols]);
        std::copy_n(&B.data[r * B.cols], B.cols, &c.data[r * c.cols + A.cols]);
    }
    return a.graph->op(std::move(c), {a, b}, [a, b](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        const std::size_t ca = g.value(a.id).cols, cb = g.value(b.id).cols;
        if (g.requires_grad(a.id)) {
            Tensor& ga = g.grad_buffer(a.id);
            for (std::size_t r = 0; r < ga.rows; ++r)
                for (std::size_t k = 0; k < ca; ++k) ga(r, k) += gy(r, k);
        }
        if (g.requires_grad(b.id)) {
            Tensor& gb = g.grad_buffer(b.id);
            for (std::size_t r = 0; r < gb.rows; ++r)
                for (std::size_t k = 0; k < cb; ++k) gb(r, k) += gy(r, ca + k);
        }
    });
}

/// Rows [begin, end) of `a`.
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    const Tensor& A = a.value();
    if (begin > end || end > A.rows)
        fail(ErrorKind::usage, "shape-mismatch", "slice_rows [" + std::to_string(begin) + "," + std::to_string(end) +
                                                     ") of " + A.shape_string());
    Tensor s(end - begin, A.cols);
    std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(begin * A.cols),
              A.data.begin() + static_cast<std::ptrdiff_t>(end * A.cols), s.data.begin());
    return a.graph->op(std::move(s), {a}, [a, begin](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gy.size(); ++i) ga.data[begin * ga.cols + i] += gy.data[i];
    });
}

/// Rows of `a` selected by `indices` (repeats allowed). Not differentiable
/// with respect to the indices; the gradient scatters back to the source rows.
inline Var gather_rows(Var a, std::vector<std::size_t> indices) {
    const Tensor& A = a.value();
    for (const auto i : indices)
        if (i >= A.rows) fail(ErrorKind::usage, "index-out-of-range", "gather_rows index " + std::to_string(i) + " of " + A.shape_string());
    Tensor out(indices.size(), A.cols);
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::copy_n(&A.data[indices[r] * A.cols], A.cols, &out.data[r * A.cols]);
    return a.graph->op(std::move(out), {a}, [a, idx = std::move(indices)](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t k = 0; k < ga.cols; ++k) ga(idx[r], k) += gy(r, k);
    });
}

// ---------------------------------------------------------------- elementwise

inline Var relu(Var a) {
    return ad_detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                            [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var leaky_relu(Var a, double slope = 0.2) {
    return ad_detail::unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                            [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

/// log(1 + e^x), evaluated without overflow.
inline Var softplus(Var a) {
    return ad_detail::unary(
        a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

inline Var square(Var a) {
    return ad_detail::unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

/// Square root; the derivative at 0 is taken as 0.
inline Var sqrt(Var a) {
    return ad_detail::unary(a, [](double x) { return std::sqrt(x); },
                            [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

inline Var exp(Var a) {
    return ad_detail::unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

// ---------------------------------------------------------------- reductions

inline Var reduce_sum(Var a) {
    double s = 0.0;
    for (const double v : a.value().data) s += v;
    return a.graph->op(Tensor::scalar(s), {a}, [a](Graph& g, std::size_t self) {
        const double gy = g.grad_buffer(self).data[0];
        for (auto& v : g.grad_buffer(a.id).data) v += gy;
    });
}

inline Var reduce_mean(Var a) {
    const double n = static_cast<double>(a.value().size());
    if (n == 0) fail(ErrorKind::usage, "shape-mismatch", "reduce_mean of an empty tensor");
    return scalar_mul(reduce_sum(a), 1.0 / n);
}

/// Per-row minimum (rows x 1). With `exclude_diagonal`, entry (r, r) is skipped
/// (requires at least two columns). The subgradient goes to the argmin, lowest
/// column on ties.
inline Var min_rows(Var a, bool exclude_diagonal = false) {
    const Tensor& A = a.value();
    if (A.cols == 0 || (exclude_diagonal && A.cols < 2))
        fail(ErrorKind::usage, "shape-mismatch", "min_rows over " + A.shape_string());
    Tensor out(A.rows, 1);
    std::vector<std::size_t> arg(A.rows);
    for (std::size_t r = 0; r < A.rows; ++r) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = A.cols;
        for (std::size_t c = 0; c < A.cols; ++c) {
            if (exclude_diagonal && c == r) continue;
            if (bi == A.cols || A(r, c) < best) {
                best = A(r, c);
                bi = c;
            }
        }
        out.data[r] = best;
        arg[r] = bi;
    }
    return a.graph->op(std::move(out), {a}, [a, arg = std::move(arg)](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t r = 0; r < arg.size(); ++r) ga(r, arg[r]) += gy.data[r];
    });
}

/// Per-column minimum (1 x cols), subgradient to the lowest-row argmin.
inline Var min_cols(Var a) {
    const Tensor& A = a.value();
    if (A.rows == 0) fail(ErrorKind::usage, "shape-mismatch", "min_cols over " + A.shape_string());
    Tensor out(1, A.cols);
    std::vector<std::size_t> arg(A.cols, 0);
    for (std::size_t c = 0; c < A.cols; ++c) out.data[c] = A(0, c);
    for (std::size_t r = 1; r < A.rows; ++r)
        for (std::size_t c = 0; c < A.cols; ++c)
            if (A(r, c) < out.data[c]) {
                out.data[c] = A(r, c);
                arg[c] = r;
            }
    return a.graph->op(std::move(out), {a}, [a, arg = std::move(arg)](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t c = 0; c < arg.size(); ++c) ga(arg[c], c) += gy.data[c];
    });
}

/// Max over consecutive groups of `group` rows: (rows / group) x cols.
/// Subgradient to the first maximal row of each group.
inline Var max_pool_groups(Var a, std::size_t group) {
    const Tensor& A = a.value();
    if (group == 0 || A.rows % group != 0)
        fail(ErrorKind::usage, "shape-mismatch", "max_pool_groups(" + std::to_string(group) + ") over " + A.shape_string());
    const std::size_t n = A.rows / group;
    Tensor out(n, A.cols);
    std::vector<std::size_t> arg(n * A.cols);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < A.cols; ++c) {
            std::size_t best = i * group;
            for (std::size_t r = i * group + 1; r < (i + 1) * group; ++r)
                if (A(r, c) > A(best, c)) best = r;
            out(i, c) = A(best, c);
            arg[i * A.cols + c] = best;
        }
    return a.graph->op(std::move(out), {a}, [a, arg = std::move(arg)](Graph& g, std::size_t self) {
        const Tensor& gy = g.grad_buffer(self);
        Tensor& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gy.rows; ++i)
            for (std::size_t c = 0; c < gy.cols; ++c) ga(arg[i * gy.cols + c], c) += gy(i, c);
    });
}

/// Squared Euclidean distances between the rows of `a` (m x d) and `b` (n x d): m x n.
inline Var pairwise_sq_dist(Var a, Var b) {
    using namespace ad_detail;
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols != B.cols) shape_error("pairwise_sq_dist", A, B);
    Tensor D(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < B.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) {
                const double d = A(i, k) - B(j, k);
                s += d * d;
            }
            D(i, j) = s;
        }
    return a.graph->op(std::move(D), {a, b}, [a, b](Graph& g, std::size_t self) {
        const Tensor& G = g.grad_buffer(self);
        const Tensor& A = g.value(a.id);
        const Tensor& B = g.value(b.id);
        const bool ga_on = g.requires_grad(a.id), gb_on = g.requires_grad(b.id);
        Tensor* ga = ga_on ? &g.grad_buffer(a.id) : nullptr;
        Tensor* gb = gb_on ? &g.grad_buffer(b.id) : nullptr;
        for (std::size_t i = 0; i < A.rows; ++i)
            for (std::size_t j = 0; j < B.rows; ++j) {
                const double w = G(i, j);
                if (w == 0.0) continue;
                for (std::size_t k = 0; k < A.cols; ++k) {
                    const double d = 2.0 * w * (A(i, k) - B(j, k));
                    if (ga) (*ga)(i, k) += d;
                    if (gb) (*gb)(j, k) -= d;
                }
            }
    });
}

// ---------------------------------------------------------------- temperature softmax

/// Row-wise softmax of logits / t^2 (max-subtracted). Rows approach one-hot as
/// t -> 0. `t` is a schedule constant, not differentiated.
inline Var t_softmax_rows(Var logits, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::usage, "invalid-temperature", "temperature must be > 0");
    const double inv = 1.0 / (t * t);
    const Tensor& L = logits.value();
    Tensor S(L.rows, L.cols);
    for (std::size_t r = 0; r < L.rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < L.cols; ++c) mx = std::max(mx, L(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < L.cols; ++c) {
            S(r, c) = std::exp((L(r, c) - mx) * inv);
            sum += S(r, c);
        }
        for (std::size_t c = 0; c < L.cols; ++c) S(r, c) /= sum;
    }
    return logits.graph->op(std::move(S), {logits}, [logits, inv](Graph& g, std::size_t self) {
        const Tensor& S = g.value(self);
        const Tensor& G = g.grad_buffer(self);
        Tensor& gl = g.grad_buffer(logits.id);
        for (std::size_t r = 0; r < S.rows; ++r) {
            double inner = 0.0;
            for (std::size_t c = 0; c < S.cols; ++c) inner += G(r, c) * S(r, c);
            for (std::size_t c = 0; c < S.cols; ++c) gl(r, c) += S(r, c) * (G(r, c) - inner) * inv;
        }
    });
}

// ---------------------------------------------------------------- gradient checking

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t entries_checked = 0;
    bool passed = false;
};

using GraphBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

/// Optional per-entry callback: (input, entry, analytic, numeric).
using GradEntryObserver = std::function<void(std::size_t, std::size_t, double, double)>;

/// Compares reverse-mode gradients of a scalar-valued builder against central
/// differences on every entry of every input. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckReport grad_check(const GraphBuilder& f, const std::vector<Tensor>& inputs, double step = 1e-5,
                                  double tol = 1e-4, const GradEntryObserver& observe = {}) {
    auto evaluate = [&](const std::vector<Tensor>& xs) {
        Graph g;
        std::vector<Var> vars;
        vars.reserve(xs.size());
        for (const auto& x : xs) vars.push_back(g.constant(x));
        const Var out = f(g, vars);
        const Tensor& v = out.value();
        if (v.size() != 1) fail(ErrorKind::usage, "shape-mismatch", "grad_check needs a scalar output, got " + v.shape_string());
        if (!std::isfinite(v.item())) fail(ErrorKind::numerical, "non-finite", "forward pass produced a non-finite value");
        return v.item();
    };

    std::vector<Tensor> analytic;
    {
        Graph g;
        std::vector<Var> vars;
        for (const auto& x : inputs) {
            if (!x.all_finite()) fail(ErrorKind::numerical, "non-finite", "grad_check input is not finite");
            vars.push_back(g.leaf(x));
        }
        const Var out = f(g, vars);
        if (out.value().size() != 1)
            fail(ErrorKind::usage, "shape-mismatch", "grad_check needs a scalar output, got " + out.value().shape_string());
        if (!std::isfinite(out.value().item()))
            fail(ErrorKind::numerical, "non-finite", "forward pass produced a non-finite value");
        g.backward(out);
        for (const auto& v : vars) analytic.push_back(g.grad(v.id));
    }

    GradCheckReport report;
    std::vector<Tensor> xs = inputs;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        for (std::size_t i = 0; i < xs[t].size(); ++i) {
            const double orig = xs[t].data[i];
            xs[t].data[i] = orig + step;
            const double fp = evaluate(xs);
            xs[t].data[i] = orig - step;
            const double fm = evaluate(xs);
            xs[t].data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[t].data[i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            if (observe) observe(t, i, a, numeric);
            ++report.entries_checked;
            if (report.entries_checked == 1 || err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_input = t;
                report.worst_entry = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < tol;
    return report;
}

} // namespace pcs

#endif
