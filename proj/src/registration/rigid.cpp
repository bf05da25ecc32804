#include "elastreg/registration/rigid.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace elastreg {

RigidTransform procrustes(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
    if (source.size() != target.size()) throw DimensionMismatch("procrustes: unequal point counts");
    const std::size_t n = source.size();
    if (n < 3) throw DegenerateConfiguration("procrustes: need at least 3 point pairs");

    Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        cs += source[i];
        ct += target[i];
    }
    cs /= static_cast<double>(n);
    ct /= static_cast<double>(n);

    Mat3 H = Mat3::Zero();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        H += (source[i] - cs) * (target[i] - ct).transpose();
        scale += (source[i] - cs).squaredNorm();
    }

    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    // Collinear source points leave the rotation about their axis free.
    if (scale <= 0.0 || sv[1] <= 1e-12 * (sv[0] + std::numeric_limits<double>::min()))
        throw DegenerateConfiguration("procrustes: points are collinear or coincident");

    Mat3 D = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) D(2, 2) = -1.0;

    RigidTransform T;
    T.rotation = svd.matrixV() * D * svd.matrixU().transpose();
    T.translation = ct - T.rotation * cs;
    return T;
}

namespace {

int nearest_point(const std::vector<Vec3>& pts, const Vec3& q) {
    int best = 0;
    double best_d = (pts[0] - q).squaredNorm();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = (pts[i] - q).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace

IcpResult rigid_icp(const PointCloud& source, const PointCloud& target, int max_iters, double tol) {
    if (source.size() < 3 || target.size() < 3)
        throw DegenerateConfiguration("rigid_icp: need at least 3 points in each cloud");

    IcpResult best;
    best.rms = std::numeric_limits<double>::infinity();

    RigidTransform T;
    double prev_rms = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        std::vector<Vec3> moved(source.points.size());
        for (std::size_t i = 0; i < source.points.size(); ++i) moved[i] = T.apply(source.points[i]);

        std::vector<Vec3> matched(moved.size());
        double sq = 0.0;
        for (std::size_t i = 0; i < moved.size(); ++i) {
            matched[i] = target.points[nearest_point(target.points, moved[i])];
            sq += (matched[i] - moved[i]).squaredNorm();
        }
        const double rms = std::sqrt(sq / static_cast<double>(moved.size()));
        if (rms < best.rms) {
            best.rms = rms;
            best.transform = T;
            best.iterations = it;
        }
        if (std::abs(prev_rms - rms) < tol) break;
        prev_rms = rms;

        // Re-estimate the full transform from the original source each round.
        T = procrustes(source.points, matched);
    }
    return best;
}

}  // namespace elastreg
