#pragma once
// Random small localizer instances checked stage by stage against the oracle.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "satloc/localizer.hpp"

namespace satloc::oracle {

/// Empty string when every stage agrees to `tol`; otherwise a description of
/// the first mismatch.
inline std::string check_random_instance(std::mt19937_64& rng, double tol = 1e-9)
{
    std::uniform_int_distribution<int> pick_m(1, 10), pick_d(1, 4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    const int m = pick_m(rng), d = pick_d(rng);

    std::vector<std::vector<double>> cols(m, std::vector<double>(d));
    Eigen::MatrixXd y(d, m);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < d; ++k) y(k, j) = cols[j][k] = g(rng);
    }
    std::vector<double> live_v(d);
    Embedding live(d);
    for (int k = 0; k < d; ++k) live[k] = live_v[k] = g(rng);
    std::vector<Xy> pos(m);
    std::vector<Point2> pts(m);
    double pos_scale = 0.0;
    for (int j = 0; j < m; ++j) {
        pos[j] = {coord(rng), coord(rng)};
        pts[j] = {pos[j].x, pos[j].y};
        pos_scale = std::max({pos_scale, std::abs(pos[j].x), std::abs(pos[j].y)});
    }

    std::ostringstream why;
    why << "M=" << m << " D=" << d << ": ";

    const std::vector<double> w_ref = weights(cols, live_v);
    const std::vector<double> w = compute_weights(y, live);
    for (int j = 0; j < m; ++j) {
        double scale = 0.0;
        for (int k = 0; k < d; ++k) scale += std::abs(cols[j][k] * live_v[k]);
        if (!close(w[j], w_ref[j], tol, scale)) return why.str() + "weight " + std::to_string(j);
    }

    const std::size_t best_ref = argmax(w_ref);
    if (best_reference(w) != best_ref) return why.str() + "best reference index";

    const std::vector<double> wbar_ref = thresholded(w_ref);
    const ThresholdResult th = threshold_and_normalize(w);
    if (wbar_ref.empty() != th.degenerate) return why.str() + "degeneracy flag";
    if (th.degenerate) return {};
    for (int j = 0; j < m; ++j) {
        if ((wbar_ref[j] == 0.0) != (th.normalized[j] == 0.0)) return why.str() + "threshold membership";
        if (!close(th.normalized[j], wbar_ref[j], tol)) return why.str() + "normalized weight";
    }

    const Xy mean_ref = weighted_mean(wbar_ref, pos);
    const Point2 mean = estimate_position(th.normalized, pts);
    if (!close(mean.x, mean_ref.x, tol, pos_scale) || !close(mean.y, mean_ref.y, tol, pos_scale)) {
        return why.str() + "position";
    }

    const Cov cov_ref = covariance(w_ref, pos, mean_ref);
    const CovarianceEstimate cov = estimate_covariance(w, pts, mean);
    const double cov_scale = 4.0 * pos_scale * pos_scale;
    if (!close(cov.covariance(0, 0), cov_ref.xx, tol, cov_scale) ||
        !close(cov.covariance(0, 1), cov_ref.xy, tol, cov_scale) ||
        !close(cov.covariance(1, 0), cov_ref.xy, tol, cov_scale) ||
        !close(cov.covariance(1, 1), cov_ref.yy, tol, cov_scale)) {
        return why.str() + "covariance";
    }
    if (!close(cov.sigma_long, std::sqrt(cov_ref.xx), tol, 2.0 * pos_scale) ||
        !close(cov.sigma_lat, std::sqrt(cov_ref.yy), tol, 2.0 * pos_scale)) {
        return why.str() + "sigma";
    }

    const std::vector<double> angles = SweepSpec{}.values();
    const int k_count = static_cast<int>(angles.size());
    std::vector<std::vector<double>> rot(k_count, std::vector<double>(d));
    Eigen::MatrixXd sweep(d, k_count);
    for (int k = 0; k < k_count; ++k) {
        for (int r = 0; r < d; ++r) sweep(r, k) = rot[k][r] = g(rng);
    }
    double offset_ref = 0.0;
    const bool valid_ref = heading(rot, cols[best_ref], angles, offset_ref);
    const HeadingEstimate h = heading_from_sweep(sweep, y.col(static_cast<Eigen::Index>(best_ref)), angles);
    if (h.valid != valid_ref) return why.str() + "heading validity";
    if (valid_ref && !close(h.offset, offset_ref, tol, 5.0)) return why.str() + "heading offset";
    return {};
}

}  // namespace satloc::oracle
