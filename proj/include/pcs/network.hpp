#ifndef PCS_NETWORK_HPP
#define PCS_NETWORK_HPP

// Simplification network: feature extractor, sampling-matrix selection,
// double-scale offset refinement and the saliency regressor.
//
// Weight containers are templated on the element type so the same layout
// holds plain Tensors (storage, optimizer, checkpoints) and graph Vars
// (a forward pass). `bind` maps one onto the other.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "pcs/autodiff.hpp"
#include "pcs/checkpoint.hpp"
#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/knn.hpp"
#include "pcs/losses.hpp"
#include "pcs/rng.hpp"

namespace pcs {

// ---------------------------------------------------------------- configuration

struct ExtractorConfig {
    std::size_t width = 32;     // output channels k
    std::size_t neighbors = 8;  // coordinate-space kNN group size
    std::size_t blocks = 2;
};

struct PcsNetConfig {
    ExtractorConfig extractor;
    std::size_t m = 32; // output points per patch
    std::vector<std::size_t> offset_widths{128, 128, 64, 3};
    /// When true the selection path reuses the refinement extractor.
    bool share_extractor = false;
    double leaky_slope = 0.2;
    /// Input convention: patches are centered and scaled to unit radius before
    /// the forward pass, outputs mapped back afterwards.
    bool normalize_patches = true;
    /// Also rotate each patch onto its principal axes (largest spread first,
    /// normal last) so the network sees every patch in a common pose.
    bool canonical_pose = true;
    std::size_t patch_size = 1024; // n used in training, reused at inference
};

struct SaliencyNetConfig {
    ExtractorConfig extractor;
    std::vector<std::size_t> head_widths{128, 128, 64, 1};
    double leaky_slope = 0.2;
};

inline void to_json(nlohmann::json& j, const ExtractorConfig& c) {
    j = {{"width", c.width}, {"neighbors", c.neighbors}, {"blocks", c.blocks}};
}
inline void from_json(const nlohmann::json& j, ExtractorConfig& c) {
    c.width = j.value("width", c.width);
    c.neighbors = j.value("neighbors", c.neighbors);
    c.blocks = j.value("blocks", c.blocks);
}
inline void to_json(nlohmann::json& j, const PcsNetConfig& c) {
    j = {{"extractor", c.extractor}, {"m", c.m}, {"offset_widths", c.offset_widths},
         {"share_extractor", c.share_extractor}, {"leaky_slope", c.leaky_slope},
         {"normalize_patches", c.normalize_patches}, {"canonical_pose", c.canonical_pose},
         {"patch_size", c.patch_size}};
}
inline void from_json(const nlohmann::json& j, PcsNetConfig& c) {
    if (j.contains("extractor")) c.extractor = j.at("extractor").get<ExtractorConfig>();
    c.m = j.value("m", c.m);
    c.offset_widths = j.value("offset_widths", c.offset_widths);
    c.share_extractor = j.value("share_extractor", c.share_extractor);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.normalize_patches = j.value("normalize_patches", c.normalize_patches);
    c.canonical_pose = j.value("canonical_pose", c.canonical_pose);
    c.patch_size = j.value("patch_size", c.patch_size);
}
inline void to_json(nlohmann::json& j, const SaliencyNetConfig& c) {
    j = {{"extractor", c.extractor}, {"head_widths", c.head_widths}, {"leaky_slope", c.leaky_slope}};
}
inline void from_json(const nlohmann::json& j, SaliencyNetConfig& c) {
    if (j.contains("extractor")) c.extractor = j.at("extractor").get<ExtractorConfig>();
    c.head_widths = j.value("head_widths", c.head_widths);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
}

inline void validate(const PcsNetConfig& c) {
    if (c.extractor.width == 0 || c.extractor.neighbors == 0 || c.m == 0)
        fail(ErrorKind::usage, "bad-config", "width, neighbors and m must be positive");
    if (c.offset_widths.empty() || c.offset_widths.back() != 3)
        fail(ErrorKind::usage, "bad-config", "offset MLP must end with width 3");
}

inline void validate(const SaliencyNetConfig& c) {
    if (c.extractor.width == 0 || c.extractor.neighbors == 0)
        fail(ErrorKind::usage, "bad-config", "width and neighbors must be positive");
    if (c.head_widths.empty() || c.head_widths.back() != 1)
        fail(ErrorKind::usage, "bad-config", "saliency head must end with width 1");
}

// ---------------------------------------------------------------- weights

template <class T>
struct Linear {
    T weight; // in x out
    T bias;   // 1 x out
};

template <class T>
struct EdgeBlock {
    Linear<T> edge; // 2k -> k on [h_j - h_i | h_i]
    Linear<T> fuse; // 2k -> k on [pooled | block input]
};

template <class T>
struct ExtractorWeights {
    Linear<T> lift; // 3 -> k
    std::vector<EdgeBlock<T>> blocks;
};

template <class T>
struct PcsNetWeights {
    ExtractorWeights<T> select; // F1 path; empty when the extractor is shared
    ExtractorWeights<T> refine; // F2 / F3 path
    // k -> m logits, no bias: a per-column constant cancels in the softmax over inputs.
    T project;
    std::vector<Linear<T>> offset;
};

template <class T>
struct SaliencyNetWeights {
    ExtractorWeights<T> features;
    std::vector<Linear<T>> head;
};

struct PcsNetParams {
    PcsNetConfig config;
    PcsNetWeights<Tensor> weights;
};

struct SaliencyNetParams {
    SaliencyNetConfig config;
    SaliencyNetWeights<Tensor> weights;
};

// Visit every tensor with a stable dotted name.

template <class T, class Fn>
void visit(Linear<T>& l, const std::string& prefix, Fn&& fn) {
    fn(prefix + ".weight", l.weight);
    fn(prefix + ".bias", l.bias);
}

template <class T, class Fn>
void visit(ExtractorWeights<T>& e, const std::string& prefix, Fn&& fn) {
    visit(e.lift, prefix + ".lift", fn);
    for (std::size_t b = 0; b < e.blocks.size(); ++b) {
        visit(e.blocks[b].edge, prefix + ".block" + std::to_string(b) + ".edge", fn);
        visit(e.blocks[b].fuse, prefix + ".block" + std::to_string(b) + ".fuse", fn);
    }
}

namespace net_detail {
inline bool unset(const Tensor& t) { return t.size() == 0; }
inline bool unset(const Var& v) { return v.graph == nullptr; }
} // namespace net_detail

template <class T, class Fn>
void visit(PcsNetWeights<T>& w, Fn&& fn) {
    if (!net_detail::unset(w.select.lift.weight)) visit(w.select, "select", fn);
    visit(w.refine, "refine", fn);
    fn("project.weight", w.project);
    for (std::size_t i = 0; i < w.offset.size(); ++i) visit(w.offset[i], "offset." + std::to_string(i), fn);
}

template <class T, class Fn>
void visit(SaliencyNetWeights<T>& w, Fn&& fn) {
    visit(w.features, "features", fn);
    for (std::size_t i = 0; i < w.head.size(); ++i) visit(w.head[i], "head." + std::to_string(i), fn);
}

/// Named list of references to every parameter tensor, in visit order.
template <class W>
std::vector<std::pair<std::string, Tensor*>> named_parameters(W& weights) {
    std::vector<std::pair<std::string, Tensor*>> out;
    visit(weights, [&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
    return out;
}

// Map a Tensor container onto a Var container.

inline Linear<Var> bind(Graph& g, const Linear<Tensor>& l, bool trainable) {
    return {g.leaf(l.weight, trainable), g.leaf(l.bias, trainable)};
}

inline ExtractorWeights<Var> bind(Graph& g, const ExtractorWeights<Tensor>& e, bool trainable) {
    ExtractorWeights<Var> out;
    if (e.lift.weight.size() == 0) return out;
    out.lift = bind(g, e.lift, trainable);
    for (const auto& b : e.blocks) out.blocks.push_back({bind(g, b.edge, trainable), bind(g, b.fuse, trainable)});
    return out;
}

inline PcsNetWeights<Var> bind(Graph& g, const PcsNetWeights<Tensor>& w, bool trainable) {
    PcsNetWeights<Var> out;
    out.select = bind(g, w.select, trainable);
    out.refine = bind(g, w.refine, trainable);
    out.project = g.leaf(w.project, trainable);
    for (const auto& l : w.offset) out.offset.push_back(bind(g, l, trainable));
    return out;
}

inline SaliencyNetWeights<Var> bind(Graph& g, const SaliencyNetWeights<Tensor>& w, bool trainable) {
    SaliencyNetWeights<Var> out;
    out.features = bind(g, w.features, trainable);
    for (const auto& l : w.head) out.head.push_back(bind(g, l, trainable));
    return out;
}

/// Gradients of a bound container, in visit order.
template <class Src>
std::vector<std::pair<std::string, Tensor>> gradients(const Src& bound) {
    Src copy = bound; // visit wants a mutable container
    std::vector<std::pair<std::string, Tensor>> out;
    visit(copy, [&](const std::string& name, Var& v) { out.emplace_back(name, v.grad()); });
    return out;
}

// ---------------------------------------------------------------- initialization

namespace net_detail {

inline Linear<Tensor> init_linear(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
    Linear<Tensor> l{Tensor(in, out), Tensor(1, out, 0.0)};
    const double bound = gain * std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& v : l.weight.data) v = (2.0 * rng.uniform() - 1.0) * bound;
    return l;
}

inline ExtractorWeights<Tensor> init_extractor(const ExtractorConfig& c, Rng& rng) {
    ExtractorWeights<Tensor> e;
    e.lift = init_linear(3, c.width, rng);
    for (std::size_t b = 0; b < c.blocks; ++b)
        e.blocks.push_back({init_linear(2 * c.width, c.width, rng), init_linear(2 * c.width, c.width, rng)});
    return e;
}

inline std::vector<Linear<Tensor>> init_mlp(std::size_t in, const std::vector<std::size_t>& widths, Rng& rng,
                                            double last_gain) {
    std::vector<Linear<Tensor>> layers;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        layers.push_back(init_linear(in, widths[i], rng, i + 1 == widths.size() ? last_gain : 1.0));
        in = widths[i];
    }
    return layers;
}

inline Var apply(const Linear<Var>& l, Var x) { return add_bias(matmul(x, l.weight), l.bias); }

inline Var apply_mlp(const std::vector<Linear<Var>>& layers, Var x, double slope) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = apply(layers[i], x);
        if (i + 1 < layers.size()) x = leaky_relu(x, slope);
    }
    return x;
}

} // namespace net_detail

/// Glorot-uniform weights, zero biases. The last offset layer starts at a tenth
/// of the usual scale so initial offsets are small.
inline PcsNetParams init_pcs_net(const PcsNetConfig& config, Rng& rng) {
    validate(config);
    PcsNetParams p;
    p.config = config;
    if (!config.share_extractor) p.weights.select = net_detail::init_extractor(config.extractor, rng);
    p.weights.refine = net_detail::init_extractor(config.extractor, rng);
    p.weights.project = net_detail::init_linear(config.extractor.width, config.m, rng).weight;
    p.weights.offset = net_detail::init_mlp(2 * config.extractor.width, config.offset_widths, rng, 0.1);
    return p;
}

inline SaliencyNetParams init_saliency_net(const SaliencyNetConfig& config, Rng& rng) {
    validate(config);
    SaliencyNetParams p;
    p.config = config;
    p.weights.features = net_detail::init_extractor(config.extractor, rng);
    p.weights.head = net_detail::init_mlp(config.extractor.width, config.head_widths, rng, 1.0);
    return p;
}

// ---------------------------------------------------------------- forward blocks

namespace net_detail {

inline Var extract(Var points, const ExtractorWeights<Var>& w, std::size_t neighbors, double slope) {
    const Tensor& P = points.value();
    const std::size_t n = P.rows;
    const KnnIndex index(tensor_to_points(P));
    std::vector<std::size_t> nbr, self;
    nbr.reserve(n * neighbors);
    self.reserve(n * neighbors);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& nb : index.knn(index.points()[i], neighbors)) {
            nbr.push_back(nb.index);
            self.push_back(i);
        }
    }

    Var h = leaky_relu(apply(w.lift, points), slope);
    for (const auto& block : w.blocks) {
        const std::size_t k = h.cols();
        // [h_j - h_i | h_i] W = h_j W_top + h_i (W_bottom - W_top): one product per point, not per edge.
        const Var top = slice_rows(block.edge.weight, 0, k);
        const Var bottom = slice_rows(block.edge.weight, k, 2 * k);
        const Var a = matmul(h, top);
        const Var b = matmul(h, sub(bottom, top));
        const Var edge = leaky_relu(add_bias(add(gather_rows(a, nbr), gather_rows(b, self)), block.edge.bias), slope);
        const Var pooled = max_pool_groups(edge, neighbors);
        h = leaky_relu(apply(block.fuse, concat_cols(pooled, h)), slope);
    }
    return h;
}

} // namespace net_detail

/// Per-point features (n x k): a lifted embedding refined by EdgeConv-style
/// blocks over coordinate-space kNN groups, with dense skip concatenation.
inline Var extract_features(Var points, const ExtractorWeights<Var>& weights, const ExtractorConfig& config,
                            double slope = 0.2) {
    if (points.cols() != 3) fail(ErrorKind::usage, "shape-mismatch", "points must be n x 3, got " + points.value().shape_string());
    if (points.rows() < config.neighbors)
        fail(ErrorKind::usage, "patch-too-small",
             std::to_string(points.rows()) + " points for a neighborhood of " + std::to_string(config.neighbors));
    return net_detail::extract(points, weights, config.neighbors, slope);
}

struct Selection {
    Var simplified; // R', m x 3
    Var sampling;   // S, m x n
};

/// R' = S P' with S the temperature softmax of the projected features, one row
/// per output point over the n inputs.
inline Selection simplify(Var patch, const PcsNetWeights<Var>& w, const PcsNetConfig& config, double t) {
    if (config.m > patch.rows())
        fail(ErrorKind::usage, "patch-too-small", "m=" + std::to_string(config.m) + " exceeds patch size " +
                                                      std::to_string(patch.rows()));
    const auto& extractor = config.share_extractor ? w.refine : w.select;
    const Var f1 = extract_features(patch, extractor, config.extractor, config.leaky_slope);
    const Var logits = matmul(f1, w.project);           // n x m
    const Var s = t_softmax_rows(transpose(logits), t);  // m x n
    return {matmul(s, patch), s};
}

/// Q' = R' + g(concat(S f(P'), f(R'))).
inline Var resample(Var patch, const Selection& sel, const PcsNetWeights<Var>& w, const PcsNetConfig& config) {
    const Var f2 = extract_features(patch, w.refine, config.extractor, config.leaky_slope);
    const std::size_t sparse_neighbors = std::min(config.extractor.neighbors, sel.simplified.rows());
    const Var f3 = net_detail::extract(sel.simplified, w.refine, sparse_neighbors, config.leaky_slope);
    const Var fused = concat_cols(matmul(sel.sampling, f2), f3);
    return add(sel.simplified, net_detail::apply_mlp(w.offset, fused, config.leaky_slope));
}

/// Nonnegative per-point saliency (n x 1) through a softplus output.
inline Var predict_saliency(Var points, const SaliencyNetWeights<Var>& w, const SaliencyNetConfig& config) {
    const Var f = extract_features(points, w.features, config.extractor, config.leaky_slope);
    return softplus(net_detail::apply_mlp(w.head, f, config.leaky_slope));
}

// ---------------------------------------------------------------- inference helpers

/// Similarity frame of one patch: x -> R (x - center) / scale, R orthonormal
/// with the local axes as rows.
struct PatchFrame {
    Point3 center{};
    double scale = 1.0;
    std::array<Point3, 3> axes{Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}};

    Point3 to_local(const Point3& p) const {
        const Point3 d = (p - center) / scale;
        return {dot(axes[0], d), dot(axes[1], d), dot(axes[2], d)};
    }
    Point3 to_world(const Point3& p) const { return (axes[0] * p.x + axes[1] * p.y + axes[2] * p.z) * scale + center; }
};

/// Centroid and bounding radius when `normalize`, else the identity. A patch of
/// coincident points keeps unit scale. With `canonical_pose` the axes are the
/// covariance eigenvectors by decreasing eigenvalue, each first and last axis
/// signed so the third moment along it is nonnegative, the middle one completing
/// a right-handed frame.
inline PatchFrame patch_frame(std::span<const Point3> points, bool normalize, bool canonical_pose = false) {
    PatchFrame f;
    if (!normalize || points.empty()) return f;
    f.center = centroid(points);
    const double r = bounding_radius(points, f.center);
    if (r > 1e-12) f.scale = r;
    if (!canonical_pose || points.size() < 3) return f;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector3d d(p.x - f.center.x, p.y - f.center.y, p.z - f.center.z);
        cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    auto axis = [&](int col) {
        const auto v = eig.eigenvectors().col(col);
        Point3 a{v(0), v(1), v(2)};
        double m3 = 0.0;
        for (const auto& p : points) m3 += std::pow(dot(a, p - f.center), 3);
        return m3 < 0.0 ? a * -1.0 : a;
    };
    f.axes[0] = axis(2);
    f.axes[2] = axis(0);
    f.axes[1] = cross(f.axes[2], f.axes[0]);
    return f;
}

/// The frame a network with this config expects.
inline PatchFrame patch_frame(std::span<const Point3> points, const PcsNetConfig& config) {
    return patch_frame(points, config.normalize_patches, config.canonical_pose);
}

inline std::vector<Point3> to_local(const PatchFrame& f, std::span<const Point3> points) {
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(f.to_local(p));
    return out;
}

inline std::vector<Point3> to_world(const PatchFrame& f, std::span<const Point3> points) {
    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(f.to_world(p));
    return out;
}

struct PatchForward {
    Tensor simplified; // R'
    Tensor refined;    // Q' (equals R' when resampling is off)
    Tensor sampling;   // S
};

inline PatchForward run_pcs_net(const PcsNetParams& params, std::span<const Point3> patch, double t,
                                bool with_resampling = true) {
    Graph g;
    const auto w = bind(g, params.weights, false);
    const Var p = g.constant(points_to_tensor(patch));
    const Selection sel = simplify(p, w, params.config, t);
    PatchForward out;
    out.simplified = sel.simplified.value();
    out.sampling = sel.sampling.value();
    out.refined = with_resampling ? resample(p, sel, w, params.config).value() : out.simplified;
    return out;
}

inline std::vector<double> run_saliency_net(const SaliencyNetParams& params, std::span<const Point3> points) {
    Graph g;
    const auto w = bind(g, params.weights, false);
    const Var s = predict_saliency(g.constant(points_to_tensor(points)), w, params.config);
    return s.value().data;
}

// ---------------------------------------------------------------- checkpoints

inline Checkpoint to_checkpoint(const PcsNetParams& p) {
    Checkpoint c;
    c.metadata["kind"] = "pcs-net";
    c.metadata["config"] = p.config;
    auto w = p.weights;
    visit(w, [&](const std::string& name, Tensor& t) { c.tensors.emplace_back(name, t); });
    return c;
}

inline Checkpoint to_checkpoint(const SaliencyNetParams& p) {
    Checkpoint c;
    c.metadata["kind"] = "saliency-net";
    c.metadata["config"] = p.config;
    auto w = p.weights;
    visit(w, [&](const std::string& name, Tensor& t) { c.tensors.emplace_back(name, t); });
    return c;
}

namespace net_detail {
template <class Params, class Init>
Params from_checkpoint(const Checkpoint& c, const char* kind, Init&& init) {
    if (c.metadata.value("kind", std::string()) != kind)
        fail(ErrorKind::data, "wrong-checkpoint", std::string("expected a ") + kind + " checkpoint");
    Rng rng(0);
    Params p;
    try {
        p = init(c.metadata.at("config").get<decltype(p.config)>(), rng);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, "bad-metadata", e.what());
    }
    visit(p.weights, [&](const std::string& name, Tensor& t) {
        const Tensor& src = c.tensor(name);
        if (src.rows != t.rows || src.cols != t.cols)
            fail(ErrorKind::data, "shape-mismatch", name + ": " + src.shape_string() + " vs " + t.shape_string());
        t = src;
    });
    return p;
}
} // namespace net_detail

inline PcsNetParams pcs_params_from_checkpoint(const Checkpoint& c) {
    return net_detail::from_checkpoint<PcsNetParams>(c, "pcs-net", [](const PcsNetConfig& cfg, Rng& r) { return init_pcs_net(cfg, r); });
}

inline SaliencyNetParams saliency_params_from_checkpoint(const Checkpoint& c) {
    return net_detail::from_checkpoint<SaliencyNetParams>(
        c, "saliency-net", [](const SaliencyNetConfig& cfg, Rng& r) { return init_saliency_net(cfg, r); });
}

} // namespace pcs

#endif
