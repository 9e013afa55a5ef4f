#ifndef PCS_GEOM_HPP
#define PCS_GEOM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pcs/error.hpp"

namespace pcs {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](std::size_t axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    constexpr Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Point3& operator-=(const Point3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Point3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Point3 operator+(Point3 a, const Point3& b) { return a += b; }
    friend constexpr Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
    friend constexpr Point3 operator*(Point3 a, double s) { return a *= s; }
    friend constexpr Point3 operator*(double s, Point3 a) { return a *= s; }
    friend constexpr Point3 operator/(Point3 a, double s) { return Point3{a.x / s, a.y / s, a.z / s}; }
    friend constexpr Point3 operator-(const Point3& a) { return Point3{-a.x, -a.y, -a.z}; }
    friend constexpr bool operator==(const Point3&, const Point3&) = default;
};

constexpr double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Point3 cross(const Point3& a, const Point3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double squared_norm(const Point3& a) { return dot(a, a); }
inline double norm(const Point3& a) { return std::sqrt(squared_norm(a)); }

/// Squared Euclidean distance. Every nearest-neighbor routine in the library
/// uses this exact expression so indexed and brute-force results agree bitwise.
constexpr double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Point3& a, const Point3& b) { return std::sqrt(squared_distance(a, b)); }

inline bool is_finite(const Point3& p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z); }

/// Ordered points with optional per-point saliency.
class PointCloud {
public:
    PointCloud() = default;

    explicit PointCloud(std::vector<Point3> points, std::optional<std::vector<double>> saliency = std::nullopt)
        : points_(std::move(points)), saliency_(std::move(saliency)) {
        validate();
    }

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    const std::vector<Point3>& points() const noexcept { return points_; }
    const Point3& operator[](std::size_t i) const { return points_[i]; }

    bool has_saliency() const noexcept { return saliency_.has_value(); }
    const std::optional<std::vector<double>>& saliency() const noexcept { return saliency_; }

    void set_saliency(std::optional<std::vector<double>> saliency) {
        saliency_ = std::move(saliency);
        validate();
    }

    friend bool operator==(const PointCloud&, const PointCloud&) = default;

private:
    void validate() const {
        if (points_.empty()) fail(ErrorKind::data, "empty-cloud", "point cloud has no points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!is_finite(points_[i]))
                fail(ErrorKind::data, "non-finite", "point " + std::to_string(i) + " is not finite");
        }
        if (saliency_) {
            if (saliency_->size() != points_.size())
                fail(ErrorKind::data, "saliency-length",
                     "saliency has " + std::to_string(saliency_->size()) + " values for " +
                         std::to_string(points_.size()) + " points");
            for (std::size_t i = 0; i < saliency_->size(); ++i) {
                const double s = (*saliency_)[i];
                if (!std::isfinite(s) || s < 0.0)
                    fail(ErrorKind::data, "bad-saliency", "saliency " + std::to_string(i) + " must be finite and >= 0");
            }
        }
    }

    std::vector<Point3> points_;
    std::optional<std::vector<double>> saliency_;
};

inline Point3 centroid(std::span<const Point3> points) {
    Point3 c;
    for (const auto& p : points) c += p;
    return c / static_cast<double>(points.size());
}

/// Maximum distance from `center` to any point.
inline double bounding_radius(std::span<const Point3> points, const Point3& center) {
    double r2 = 0.0;
    for (const auto& p : points) r2 = std::max(r2, squared_distance(p, center));
    return std::sqrt(r2);
}

struct NormalizedCloud {
    PointCloud cloud;
    Point3 center;
    double radius = 1.0;
};

/// Translate the centroid to the origin and scale so the farthest point has norm 1.
/// Saliency, when present, is carried over unchanged.
inline NormalizedCloud normalize_to_unit_sphere(const PointCloud& cloud) {
    const Point3 center = centroid(cloud.points());
    const double radius = bounding_radius(cloud.points(), center);
    if (!(radius > 0.0)) fail(ErrorKind::data, "degenerate-extent", "all points coincide");
    std::vector<Point3> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud.points()) out.push_back((p - center) / radius);
    return {PointCloud(std::move(out), cloud.saliency()), center, radius};
}

inline Point3 denormalize(const Point3& p, const Point3& center, double radius) { return p * radius + center; }

inline PointCloud denormalize(const PointCloud& cloud, const Point3& center, double radius) {
    std::vector<Point3> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud.points()) out.push_back(denormalize(p, center, radius));
    return PointCloud(std::move(out), cloud.saliency());
}

/// Plane {x : normal . x = offset} with a unit normal.
struct FittedPlane {
    Point3 normal{0.0, 0.0, 1.0};
    double offset = 0.0;
};

/// Total-least-squares plane: the normal is the covariance eigenvector with the
/// smallest eigenvalue. Sign is fixed so the largest-magnitude normal component
/// is positive.
inline FittedPlane fit_plane(std::span<const Point3> points) {
    if (points.size() < 3) fail(ErrorKind::data, "rank-deficient", "plane fit needs at least 3 points");
    const Point3 c = centroid(points);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector3d d(p.x - c.x, p.y - c.y, p.z - c.z);
        cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d eig = solver.eigenvalues(); // ascending
    // Collinear or coincident points leave a two-dimensional null space.
    if (!(eig(2) > 0.0) || eig(1) <= 1e-12 * eig(2))
        fail(ErrorKind::data, "rank-deficient", "points are collinear or coincident");
    Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
    Eigen::Index dominant = 0;
    n.cwiseAbs().maxCoeff(&dominant);
    if (n(dominant) < 0.0) n = -n;
    FittedPlane plane;
    plane.normal = {n(0), n(1), n(2)};
    plane.offset = dot(plane.normal, c);
    return plane;
}

inline double point_plane_distance(const Point3& p, const FittedPlane& plane) {
    return std::abs(dot(plane.normal, p) - plane.offset);
}

} // namespace pcs

#endif
