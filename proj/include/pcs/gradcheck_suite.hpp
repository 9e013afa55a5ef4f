#ifndef PCS_GRADCHECK_SUITE_HPP
#define PCS_GRADCHECK_SUITE_HPP

// Finite-difference suites over the autodiff primitives, the losses and the
// full patch pipeline. Inputs to kinked operations (relu, min, max-pool) are
// generated with a clear margin around the kinks so central differences with
// step 1e-5 never straddle one.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "pcs/autodiff.hpp"
#include "pcs/losses.hpp"
#include "pcs/network.hpp"
#include "pcs/rng.hpp"

namespace pcs {

struct NamedCheck {
    std::string name;
    GradCheckReport report;
};

namespace gc_detail {

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(r, c);
    for (auto& v : t.data) v = lo + (hi - lo) * rng.uniform();
    return t;
}

/// Entries with |x| in [0.1, 1] and random sign.
inline Tensor away_from_zero(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (auto& v : t.data) v = (0.1 + 0.9 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    return t;
}

/// Distinct entries at least 0.09 apart: a shuffled grid with small jitter.
inline Tensor well_separated(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    std::vector<std::size_t> perm(t.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = 0.1 * static_cast<double>(perm[i]) + 0.01 * rng.uniform();
    return t;
}

/// Contracts a tensor-valued op against fixed random weights so every output
/// entry contributes to the scalar.
inline Var contract(Graph& g, Var y, std::uint64_t seed) {
    Rng rng(seed);
    return reduce_sum(hadamard(y, g.constant(random_tensor(y.rows(), y.cols(), rng))));
}

} // namespace gc_detail

/// One check per differentiable primitive, on shapes drawn from `rng`.
inline std::vector<NamedCheck> check_primitives(Rng& rng, double tol = 1e-4) {
    using namespace gc_detail;
    std::vector<NamedCheck> out;
    auto dim = [&] { return 2 + rng.uniform_index(4); };
    auto run = [&](const std::string& name, const GraphBuilder& f, std::vector<Tensor> inputs) {
        out.push_back({name, grad_check(f, inputs, 1e-5, tol)});
    };
    const std::uint64_t cs = rng.next_u64();

    const std::size_t r = dim(), k = dim(), c = dim();
    run("matmul", [&](Graph& g, const std::vector<Var>& v) { return contract(g, matmul(v[0], v[1]), cs); },
        {random_tensor(r, k, rng), random_tensor(k, c, rng)});
    run("add", [&](Graph& g, const std::vector<Var>& v) { return contract(g, add(v[0], v[1]), cs); },
        {random_tensor(r, c, rng), random_tensor(r, c, rng)});
    run("sub", [&](Graph& g, const std::vector<Var>& v) { return contract(g, sub(v[0], v[1]), cs); },
        {random_tensor(r, c, rng), random_tensor(r, c, rng)});
    run("hadamard", [&](Graph& g, const std::vector<Var>& v) { return contract(g, hadamard(v[0], v[1]), cs); },
        {random_tensor(r, c, rng), random_tensor(r, c, rng)});
    run("scalar_mul", [&](Graph& g, const std::vector<Var>& v) { return contract(g, scalar_mul(v[0], -1.7), cs); },
        {random_tensor(r, c, rng)});
    run("add_bias", [&](Graph& g, const std::vector<Var>& v) { return contract(g, add_bias(v[0], v[1]), cs); },
        {random_tensor(r, c, rng), random_tensor(1, c, rng)});
    run("transpose", [&](Graph& g, const std::vector<Var>& v) { return contract(g, transpose(v[0]), cs); },
        {random_tensor(r, c, rng)});
    run("concat_cols", [&](Graph& g, const std::vector<Var>& v) { return contract(g, concat_cols(v[0], v[1]), cs); },
        {random_tensor(r, c, rng), random_tensor(r, k, rng)});
    run("slice_rows", [&](Graph& g, const std::vector<Var>& v) { return contract(g, slice_rows(v[0], 1, r), cs); },
        {random_tensor(r, c, rng)});
    {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < 2 * r; ++i) idx.push_back(rng.uniform_index(r));
        run("gather_rows", [&, idx](Graph& g, const std::vector<Var>& v) { return contract(g, gather_rows(v[0], idx), cs); },
            {random_tensor(r, c, rng)});
    }
    run("relu", [&](Graph& g, const std::vector<Var>& v) { return contract(g, relu(v[0]), cs); }, {away_from_zero(r, c, rng)});
    run("leaky_relu", [&](Graph& g, const std::vector<Var>& v) { return contract(g, leaky_relu(v[0], 0.2), cs); },
        {away_from_zero(r, c, rng)});
    run("softplus", [&](Graph& g, const std::vector<Var>& v) { return contract(g, softplus(v[0]), cs); },
        {random_tensor(r, c, rng, -3.0, 3.0)});
    run("square", [&](Graph& g, const std::vector<Var>& v) { return contract(g, square(v[0]), cs); }, {random_tensor(r, c, rng)});
    run("sqrt", [&](Graph& g, const std::vector<Var>& v) { return contract(g, sqrt(v[0]), cs); },
        {random_tensor(r, c, rng, 0.2, 2.0)});
    run("exp", [&](Graph& g, const std::vector<Var>& v) { return contract(g, exp(v[0]), cs); }, {random_tensor(r, c, rng)});
    run("reduce_sum", [&](Graph&, const std::vector<Var>& v) { return reduce_sum(square(v[0])); }, {random_tensor(r, c, rng)});
    run("reduce_mean", [&](Graph&, const std::vector<Var>& v) { return reduce_mean(square(v[0])); }, {random_tensor(r, c, rng)});
    run("min_rows", [&](Graph& g, const std::vector<Var>& v) { return contract(g, min_rows(v[0]), cs); },
        {well_separated(r, c, rng)});
    run("min_rows_offdiag", [&](Graph& g, const std::vector<Var>& v) { return contract(g, min_rows(v[0], true), cs); },
        {well_separated(r, r, rng)});
    run("min_cols", [&](Graph& g, const std::vector<Var>& v) { return contract(g, min_cols(v[0]), cs); },
        {well_separated(r, c, rng)});
    run("max_pool_groups", [&](Graph& g, const std::vector<Var>& v) { return contract(g, max_pool_groups(v[0], 3), cs); },
        {well_separated(3 * r, c, rng)});
    run("pairwise_sq_dist", [&](Graph& g, const std::vector<Var>& v) { return contract(g, pairwise_sq_dist(v[0], v[1]), cs); },
        {random_tensor(r, 3, rng), random_tensor(k, 3, rng)});
    for (const double t : {1.0, 0.5}) {
        run("t_softmax_rows(t=" + std::to_string(t).substr(0, 3) + ")",
            [&, t](Graph& g, const std::vector<Var>& v) { return contract(g, t_softmax_rows(v[0], t), cs); },
            {random_tensor(r, c, rng)});
    }
    return out;
}

/// Each loss and the joint objective with respect to Q (and P where it enters).
inline std::vector<NamedCheck> check_losses(Rng& rng, double tol = 1e-4) {
    using gc_detail::random_tensor;
    std::vector<NamedCheck> out;
    const Tensor q = random_tensor(5, 3, rng), p = random_tensor(12, 3, rng);
    const Tensor s = random_tensor(12, 1, rng, 0.0, 1.0);
    auto run = [&](const std::string& name, const GraphBuilder& f, std::vector<Tensor> inputs) {
        out.push_back({name, grad_check(f, inputs, 1e-5, tol)});
    };
    run("L_r", [](Graph&, const std::vector<Var>& v) { return loss_reconstruction(v[0], v[1]); }, {q, p});
    run("L_sp", [](Graph&, const std::vector<Var>& v) { return loss_spread(v[0], v[1]); }, {q, p});
    run("L_rep", [](Graph&, const std::vector<Var>& v) { return loss_repulsion(v[0]); }, {q});
    run("L_s", [](Graph&, const std::vector<Var>& v) { return loss_saliency(v[0], v[1], v[2]); }, {q, p, s});
    for (const LossMode mode : {LossMode::spread, LossMode::saliency}) {
        LossWeights w;
        w.mode = mode;
        run(std::string("L_joint(") + std::string(to_string(mode)) + ")",
            [w](Graph&, const std::vector<Var>& v) { return loss_joint(v[0], v[1], &v[2], w); }, {q, p, s});
    }
    return out;
}

/// Verdict of the full-pipeline check plus an account of every entry over
/// tolerance. An entry is "kink" when a 100x smaller step agrees with the
/// analytic value (the 1e-5 stencil straddles a relu/min/max switch), and
/// "floor" when |analytic - numeric| is within a few ulps of the loss divided
/// by 2*step, i.e. below what double-precision differences can resolve.
struct PipelineCheck {
    GradCheckReport report;
    double loss = 0.0;
    std::size_t failing = 0;
    std::size_t kink = 0;
    std::size_t floor = 0;

    bool all_explained() const { return kink + floor == failing; }
};

inline PipelineCheck check_pipeline(std::uint64_t seed, double t = 1.0, std::size_t n = 16, std::size_t m = 4,
                                    std::size_t k = 8, double tol = 1e-4) {
    Rng rng(seed);
    PcsNetConfig cfg;
    cfg.extractor.width = k;
    cfg.extractor.neighbors = 4;
    cfg.extractor.blocks = 2;
    cfg.m = m;
    cfg.patch_size = n;
    auto params = init_pcs_net(cfg, rng);
    // Undo the small last-layer init so the refinement branch carries real gradient.
    for (auto& v : params.weights.offset.back().weight.data) v *= 10.0;
    const Tensor patch = gc_detail::random_tensor(n, 3, rng);

    std::vector<Tensor> values;
    for (auto& [name, tensor] : named_parameters(params.weights)) values.push_back(*tensor);

    const GraphBuilder f = [&](Graph& g, const std::vector<Var>& vars) {
        Graph scratch;
        auto w = bind(scratch, params.weights, false);
        std::size_t i = 0;
        visit(w, [&](const std::string&, Var& v) { v = vars[i++]; });
        const Var p = g.constant(patch);
        const Selection sel = simplify(p, w, cfg, t);
        const Var q = resample(p, sel, w, cfg);
        return loss_joint(q, p, nullptr, LossWeights{});
    };

    PipelineCheck out;
    {
        Graph g;
        std::vector<Var> vars;
        for (const auto& v : values) vars.push_back(g.constant(v));
        out.loss = f(g, vars).value().item();
    }
    struct Entry {
        std::size_t input, index;
        double analytic, numeric;
    };
    std::vector<Entry> over;
    const double step = 1e-5;
    out.report = grad_check(f, values, step, tol, [&](std::size_t in, std::size_t i, double a, double num) {
        if (std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8}) >= tol) over.push_back({in, i, a, num});
    });

    const double ulp = std::nextafter(std::abs(out.loss), INFINITY) - std::abs(out.loss);
    const double floor_abs = 4.0 * ulp / (2.0 * step);
    auto eval = [&](const std::vector<Tensor>& xs) {
        Graph g;
        std::vector<Var> vars;
        for (const auto& x : xs) vars.push_back(g.constant(x));
        return f(g, vars).value().item();
    };
    out.failing = over.size();
    for (const auto& e : over) {
        if (std::abs(e.analytic - e.numeric) <= floor_abs) {
            ++out.floor;
            continue;
        }
        std::vector<Tensor> xs = values;
        const double h = step / 100.0;
        xs[e.input].data[e.index] = values[e.input].data[e.index] + h;
        const double fp = eval(xs);
        xs[e.input].data[e.index] = values[e.input].data[e.index] - h;
        const double fm = eval(xs);
        const double fine = (fp - fm) / (2.0 * h);
        const double fine_floor = 4.0 * ulp / (2.0 * h);
        if (std::abs(e.analytic - fine) <= std::max(tol * std::max(std::abs(e.analytic), std::abs(fine)), fine_floor)) ++out.kink;
    }
    return out;
}

} // namespace pcs

#endif
