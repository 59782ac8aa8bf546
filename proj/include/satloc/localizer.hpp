#pragma once
// Online localization against a codebook window.
//
// Pipeline for one live frame:
//   1. window   = references within +-half_window of the prior's arc length
//   2. w        = Y_window^T y                    (inner-product kernel)
//   3. w_th     = w where w >= max(w) - std(w), else 0; normalized to sum 1
//   4. x_hat    = X_window w_th                   (weighted mean position)
//   5. P        = sum_i v_i (x_i - x_hat)(x_i - x_hat)^T, v from the raw w
//   6. heading  = beta + sum_k theta_k wbar_theta_k, where w_theta are the
//                 kernel weights of the rotated live image against the best
//                 reference, thresholded as in step 3 (by default), and
//                 beta is that reference's heading
//   7. accepted = sigma_long <= threshold && sigma_lat <= threshold

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "satloc/codebook.hpp"
#include "satloc/encoder.hpp"
#include "satloc/grid.hpp"
#include "satloc/image.hpp"

namespace satloc {

/// How the raw kernel weights enter the covariance.
enum class CovarianceWeighting {
    RectifiedNormalized,  ///< v = max(w, 0) / sum max(w, 0)   (default)
    SignedNormalized,     ///< v = w / sum w
    Raw,                  ///< v = w
};

/// How the heading-sweep weights become a convex weighting.
enum class HeadingWeighting {
    Thresholded,  ///< same max - std threshold as the position weights (default)
    Normalized,   ///< every rectified weight, normalized to sum 1
};

/// Uniform 1-D perturbation grid, inclusive of both ends.
struct SweepSpec {
    double min = -5.0;
    double max = 5.0;
    double step = 1.0;

    std::vector<double> values() const;
};

struct LocalizerConfig {
    double half_window = 4.0;      ///< meters along the path either side of the prior
    double sigma_threshold = 5.0;  ///< meters, applied to sigma_long and sigma_lat
    SweepSpec heading_sweep;       ///< degrees
    CovarianceWeighting covariance_weighting = CovarianceWeighting::RectifiedNormalized;
    HeadingWeighting heading_weighting = HeadingWeighting::Thresholded;
};

struct StageTimings {
    double window_us = 0.0;
    double encode_us = 0.0;
    double kernel_us = 0.0;
    double threshold_us = 0.0;
    double position_us = 0.0;
    double covariance_us = 0.0;
    double heading_us = 0.0;
    double total_us = 0.0;
};

struct LocalizationEstimate {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;          ///< beta + theta_hat, normalized
    double heading_offset = 0.0;   ///< theta_hat relative to the best reference
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double sigma_long = 0.0;       ///< sqrt(P_xx), meters
    double sigma_lat = 0.0;        ///< sqrt(P_yy), meters
    bool accepted = false;
    bool degenerate = false;       ///< no usable kernel signal; position falls back to the prior
    bool heading_valid = false;    ///< false when the sweep had no usable signal or was skipped
    std::size_t best_ref_index = 0;
    std::size_t window_size = 0;
    std::size_t survivors = 0;
    StageTimings timing;
};

// --- individual stages -----------------------------------------------------

/// w_j = <window.col(j), live>.
std::vector<double> compute_weights(const Eigen::MatrixXd& window, const Embedding& live);

/// Same, gathering columns of a larger matrix by index.
std::vector<double> compute_weights(const Eigen::MatrixXd& embeddings, std::span<const std::size_t> columns,
                                    const Embedding& live);

struct ThresholdResult {
    std::vector<double> normalized;  ///< w_th / sum(w_th); all zero when degenerate
    double threshold = 0.0;          ///< max(w) - population std(w)
    std::size_t survivors = 0;
    bool degenerate = false;         ///< all-zero input or no positive survivor mass
};

/// Entries below the threshold are zeroed; surviving entries are rectified at
/// zero before normalization so the result is a convex weighting.
ThresholdResult threshold_and_normalize(std::span<const double> raw);

Point2 estimate_position(std::span<const double> weights, std::span<const Point2> positions);

struct CovarianceEstimate {
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double sigma_long = 0.0;
    double sigma_lat = 0.0;
    bool degenerate = false;
};

CovarianceEstimate estimate_covariance(std::span<const double> raw, std::span<const Point2> positions,
                                       Point2 mean,
                                       CovarianceWeighting mode = CovarianceWeighting::RectifiedNormalized);

/// Index of the largest weight; ties go to the smaller index.
std::size_t best_reference(std::span<const double> raw);

struct HeadingEstimate {
    double offset = 0.0;           ///< sum_k theta_k * wbar_k
    bool valid = false;
    std::vector<double> weights;   ///< raw w_theta
};

/// Heading from pre-encoded rotations: `sweep` is D x K with column k the
/// encoding of the live image rotated by angles[k]. Negative kernel values are
/// rectified before normalization; no positive mass gives offset 0, invalid.
HeadingEstimate heading_from_sweep(const Eigen::MatrixXd& sweep, const Embedding& best_ref,
                                   std::span<const double> angles,
                                   HeadingWeighting mode = HeadingWeighting::Thresholded);

/// Rotate the uncompressed live image over the sweep, encode each rotation
/// and call heading_from_sweep.
HeadingEstimate estimate_heading(const Image& live, const Embedding& best_ref, const Encoder& encoder,
                                 const SweepSpec& sweep, HeadingWeighting mode = HeadingWeighting::Thresholded);

// --- full pipeline -----------------------------------------------------------

/// Encodes live, runs every stage and fills timings. Degenerate frames come
/// back rejected (position = prior), never as exceptions. Errors in window
/// selection (prior off the map) and encoding propagate.
LocalizationEstimate localize(const Codebook& cb, const PlanarPose& prior, const Image& live,
                              const Encoder& encoder, const LocalizerConfig& config);

/// For embeddings produced outside this process. No image is available to
/// rotate, so the heading stage is skipped: heading = best reference heading,
/// heading_valid = false.
LocalizationEstimate localize_embedding(const Codebook& cb, const PlanarPose& prior, const Embedding& live,
                                        const LocalizerConfig& config);

}  // namespace satloc
