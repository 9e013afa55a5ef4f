#ifndef PCS_LOSSES_HPP
#define PCS_LOSSES_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcs/autodiff.hpp"
#include "pcs/error.hpp"
#include "pcs/geom.hpp"

namespace pcs {

enum class LossMode { spread, saliency };

inline std::string_view to_string(LossMode m) { return m == LossMode::spread ? "spread" : "saliency"; }

inline LossMode parse_loss_mode(std::string_view s) {
    if (s == "spread") return LossMode::spread;
    if (s == "saliency") return LossMode::saliency;
    fail(ErrorKind::usage, "bad-mode", "loss mode must be spread or saliency, got '" + std::string(s) + "'");
}

struct LossWeights {
    double alpha = 0.01;    // reconstruction
    double beta = 0.0012;   // repulsion
    LossMode mode = LossMode::spread;
};

/// Mean over outputs of the squared distance to the nearest input.
inline Var loss_reconstruction(Var q, Var p) { return reduce_mean(min_rows(pairwise_sq_dist(q, p))); }

/// Mean over inputs of the squared distance to the nearest output.
inline Var loss_spread(Var q, Var p) { return reduce_mean(min_cols(pairwise_sq_dist(q, p))); }

/// Negated mean squared distance from each output to its nearest other output.
inline Var loss_repulsion(Var q) {
    if (q.rows() < 2) fail(ErrorKind::usage, "too-few-points", "repulsion needs at least 2 points");
    return scalar_mul(reduce_mean(min_rows(pairwise_sq_dist(q, q), true)), -1.0);
}

/// Saliency-weighted spread: mean over inputs of s_hat_j times the squared
/// distance to the nearest output. `s_hat` is n x 1.
inline Var loss_saliency(Var q, Var p, Var s_hat) {
    const Tensor& s = s_hat.value();
    if (s.rows != p.rows() || s.cols != 1)
        fail(ErrorKind::usage, "shape-mismatch", "saliency " + s.shape_string() + " not aligned to " + p.value().shape_string());
    return reduce_mean(hadamard(min_cols(pairwise_sq_dist(q, p)), transpose(s_hat)));
}

struct LossTerms {
    Var reconstruction;
    Var coverage; // spread or saliency term
    Var repulsion;
    Var total;
};

/// alpha * L_r + (L_sp | L_s) + beta * L_rep. In saliency mode `s_hat` is required.
inline LossTerms loss_joint_terms(Var q, Var p, const Var* s_hat, const LossWeights& w) {
    if (!(w.alpha > 0.0) || !(w.beta > 0.0)) fail(ErrorKind::usage, "bad-weights", "alpha and beta must be positive");
    LossTerms t;
    t.reconstruction = loss_reconstruction(q, p);
    if (w.mode == LossMode::saliency) {
        if (!s_hat) fail(ErrorKind::usage, "missing-saliency", "saliency loss mode needs per-point saliency");
        t.coverage = loss_saliency(q, p, *s_hat);
    } else {
        t.coverage = loss_spread(q, p);
    }
    t.repulsion = loss_repulsion(q);
    t.total = add(add(scalar_mul(t.reconstruction, w.alpha), t.coverage), scalar_mul(t.repulsion, w.beta));
    return t;
}

inline Var loss_joint(Var q, Var p, const Var* s_hat, const LossWeights& w) { return loss_joint_terms(q, p, s_hat, w).total; }

// Plain-value conveniences.

inline Tensor points_to_tensor(std::span<const Point3> pts) {
    Tensor t(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t(i, 0) = pts[i].x;
        t(i, 1) = pts[i].y;
        t(i, 2) = pts[i].z;
    }
    return t;
}

inline std::vector<Point3> tensor_to_points(const Tensor& t) {
    if (t.cols != 3) fail(ErrorKind::usage, "shape-mismatch", "expected n x 3, got " + t.shape_string());
    std::vector<Point3> out(t.rows);
    for (std::size_t i = 0; i < t.rows; ++i) out[i] = {t(i, 0), t(i, 1), t(i, 2)};
    return out;
}

inline Tensor column(std::span<const double> values) { return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end())); }

inline double loss_reconstruction(std::span<const Point3> q, std::span<const Point3> p) {
    Graph g;
    return loss_reconstruction(g.constant(points_to_tensor(q)), g.constant(points_to_tensor(p))).value().item();
}

inline double loss_spread(std::span<const Point3> q, std::span<const Point3> p) {
    Graph g;
    return loss_spread(g.constant(points_to_tensor(q)), g.constant(points_to_tensor(p))).value().item();
}

inline double loss_repulsion(std::span<const Point3> q) {
    Graph g;
    return loss_repulsion(g.constant(points_to_tensor(q))).value().item();
}

inline double loss_saliency(std::span<const Point3> q, std::span<const Point3> p, std::span<const double> s_hat) {
    Graph g;
    return loss_saliency(g.constant(points_to_tensor(q)), g.constant(points_to_tensor(p)), g.constant(column(s_hat)))
        .value()
        .item();
}

inline double loss_joint(std::span<const Point3> q, std::span<const Point3> p, std::span<const double> s_hat,
                         const LossWeights& w) {
    Graph g;
    const Var s = g.constant(column(s_hat));
    return loss_joint(g.constant(points_to_tensor(q)), g.constant(points_to_tensor(p)),
                      w.mode == LossMode::saliency ? &s : nullptr, w)
        .value()
        .item();
}

} // namespace pcs

#endif
