#include "satloc/localizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "satloc/map_synth.hpp"
#include "satloc/simd/kernels.hpp"

namespace satloc {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

void require_dim(const Eigen::MatrixXd& m, const Embedding& e, const char* what)
{
    if (m.rows() != e.size()) {
        throw InvalidArgument(std::string(what) + ": embedding dimension " + std::to_string(e.size()) +
                              " does not match " + std::to_string(m.rows()));
    }
}

/// Stages 2-5 and 7 on an encoded live frame; heading_fn fills the heading.
template <class HeadingFn>
LocalizationEstimate run_pipeline(const Codebook& cb, const PlanarPose& prior, const Embedding& live,
                                  const LocalizerConfig& config, Clock::time_point start,
                                  LocalizationEstimate est, HeadingFn&& heading_fn)
{
    auto t = Clock::now();
    const std::vector<std::size_t> window = select_window(cb, prior, config.half_window);
    est.timing.window_us = micros_since(t);
    est.window_size = window.size();

    t = Clock::now();
    const std::vector<double> raw = compute_weights(cb.embeddings, window, live);
    est.timing.kernel_us = micros_since(t);

    t = Clock::now();
    const ThresholdResult th = threshold_and_normalize(raw);
    est.timing.threshold_us = micros_since(t);
    est.survivors = th.survivors;

    std::vector<Point2> positions(window.size());
    for (std::size_t j = 0; j < window.size(); ++j) positions[j] = {cb.poses[window[j]].x, cb.poses[window[j]].y};

    const auto fallback = [&] {
        est.x = prior.x;
        est.y = prior.y;
        est.heading = normalize_degrees(prior.heading);
        est.heading_offset = 0.0;
        est.degenerate = true;
        est.accepted = false;
        est.covariance.setZero();
        est.sigma_long = est.sigma_lat = 0.0;
        est.timing.total_us = micros_since(start);
        return est;
    };
    if (th.degenerate) return fallback();

    t = Clock::now();
    const Point2 mean = estimate_position(th.normalized, positions);
    est.timing.position_us = micros_since(t);
    est.x = mean.x;
    est.y = mean.y;

    t = Clock::now();
    const CovarianceEstimate cov = estimate_covariance(raw, positions, mean, config.covariance_weighting);
    est.timing.covariance_us = micros_since(t);
    if (cov.degenerate) return fallback();
    est.covariance = cov.covariance;
    est.sigma_long = cov.sigma_long;
    est.sigma_lat = cov.sigma_lat;

    const std::size_t best = window[best_reference(raw)];
    est.best_ref_index = best;
    const double beta = cb.poses[best].heading;

    t = Clock::now();
    const HeadingEstimate h = heading_fn(Embedding(cb.embeddings.col(static_cast<Eigen::Index>(best))));
    est.timing.heading_us = micros_since(t);
    est.heading_valid = h.valid;
    est.heading_offset = h.offset;
    est.heading = normalize_degrees(beta + h.offset);

    est.accepted = est.sigma_long <= config.sigma_threshold && est.sigma_lat <= config.sigma_threshold;
    est.timing.total_us = micros_since(start);
    return est;
}

}  // namespace

std::vector<double> SweepSpec::values() const
{
    if (!(step > 0.0) || !(max >= min)) throw InvalidArgument("sweep: need step > 0 and max >= min");
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = min + static_cast<double>(k) * step;
    return out;
}

std::vector<double> compute_weights(const Eigen::MatrixXd& window, const Embedding& live)
{
    require_dim(window, live, "compute_weights");
    if (window.cols() < 1) throw InvalidArgument("compute_weights: empty window");
    std::vector<std::size_t> cols(static_cast<std::size_t>(window.cols()));
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return compute_weights(window, cols, live);
}

std::vector<double> compute_weights(const Eigen::MatrixXd& embeddings, std::span<const std::size_t> columns,
                                    const Embedding& live)
{
    require_dim(embeddings, live, "compute_weights");
    if (columns.empty()) throw InvalidArgument("compute_weights: empty window");
    std::vector<double> out(columns.size());
    simd::kernels().gather_dot(embeddings.data(), static_cast<std::size_t>(embeddings.rows()), columns.data(),
                               columns.size(), live.data(), out.data());
    return out;
}

ThresholdResult threshold_and_normalize(std::span<const double> raw)
{
    if (raw.empty()) throw InvalidArgument("threshold_and_normalize: empty weight vector");
    ThresholdResult res;
    res.normalized.assign(raw.size(), 0.0);
    if (std::all_of(raw.begin(), raw.end(), [](double w) { return w == 0.0; })) {
        res.degenerate = true;
        return res;
    }
    const auto m = static_cast<double>(raw.size());
    const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / m;
    double ss = 0.0;
    for (double w : raw) ss += (w - mean) * (w - mean);
    const double std_dev = std::sqrt(ss / m);
    const double peak = *std::max_element(raw.begin(), raw.end());
    res.threshold = peak - std_dev;

    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] >= res.threshold) {
            ++res.survivors;
            res.normalized[i] = std::max(raw[i], 0.0);
            sum += res.normalized[i];
        }
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        std::fill(res.normalized.begin(), res.normalized.end(), 0.0);
        res.degenerate = true;
        return res;
    }
    for (double& w : res.normalized) w /= sum;
    return res;
}

Point2 estimate_position(std::span<const double> weights, std::span<const Point2> positions)
{
    if (weights.size() != positions.size()) throw InvalidArgument("estimate_position: size mismatch");
    Point2 out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.x += positions[i].x * weights[i];
        out.y += positions[i].y * weights[i];
    }
    return out;
}

CovarianceEstimate estimate_covariance(std::span<const double> raw, std::span<const Point2> positions,
                                       Point2 mean, CovarianceWeighting mode)
{
    if (raw.size() != positions.size()) throw InvalidArgument("estimate_covariance: size mismatch");
    std::vector<double> v(raw.begin(), raw.end());
    CovarianceEstimate res;
    if (mode != CovarianceWeighting::Raw) {
        if (mode == CovarianceWeighting::RectifiedNormalized) {
            for (double& w : v) w = std::max(w, 0.0);
        }
        const double sum = std::accumulate(v.begin(), v.end(), 0.0);
        if (sum == 0.0 || !std::isfinite(sum)) {
            res.degenerate = true;
            return res;
        }
        for (double& w : v) w /= sum;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double dx = positions[i].x - mean.x;
        const double dy = positions[i].y - mean.y;
        sxx += v[i] * dx * dx;
        sxy += v[i] * dx * dy;
        syy += v[i] * dy * dy;
    }
    res.covariance << sxx, sxy, sxy, syy;
    res.sigma_long = std::sqrt(std::max(sxx, 0.0));
    res.sigma_lat = std::sqrt(std::max(syy, 0.0));
    return res;
}

std::size_t best_reference(std::span<const double> raw)
{
    if (raw.empty()) throw InvalidArgument("best_reference: empty weight vector");
    // max_element returns the first maximum.
    return static_cast<std::size_t>(std::max_element(raw.begin(), raw.end()) - raw.begin());
}

HeadingEstimate heading_from_sweep(const Eigen::MatrixXd& sweep, const Embedding& best_ref,
                                   std::span<const double> angles, HeadingWeighting mode)
{
    if (static_cast<std::size_t>(sweep.cols()) != angles.size() || angles.empty()) {
        throw InvalidArgument("heading_from_sweep: need one encoded rotation per sweep angle");
    }
    HeadingEstimate h;
    h.weights = compute_weights(sweep, best_ref);
    std::vector<double> wbar;
    if (mode == HeadingWeighting::Thresholded) {
        ThresholdResult th = threshold_and_normalize(h.weights);
        if (th.degenerate) return h;
        wbar = std::move(th.normalized);
    } else {
        double sum = 0.0;
        for (double w : h.weights) sum += std::max(w, 0.0);
        if (!(sum > 0.0) || !std::isfinite(sum)) return h;
        wbar.resize(h.weights.size());
        for (std::size_t k = 0; k < wbar.size(); ++k) wbar[k] = std::max(h.weights[k], 0.0) / sum;
    }
    double offset = 0.0;
    for (std::size_t k = 0; k < angles.size(); ++k) offset += angles[k] * wbar[k];
    h.offset = offset;
    h.valid = true;
    return h;
}

HeadingEstimate estimate_heading(const Image& live, const Embedding& best_ref, const Encoder& encoder,
                                 const SweepSpec& sweep, HeadingWeighting mode)
{
    const std::vector<double> angles = sweep.values();
    Eigen::MatrixXd encoded(encoder.dim(), static_cast<Eigen::Index>(angles.size()));
    for (std::size_t k = 0; k < angles.size(); ++k) {
        encoded.col(static_cast<Eigen::Index>(k)) = encoder.encode(rotate_image(live, angles[k]));
    }
    return heading_from_sweep(encoded, best_ref, angles, mode);
}

LocalizationEstimate localize(const Codebook& cb, const PlanarPose& prior, const Image& live,
                              const Encoder& encoder, const LocalizerConfig& config)
{
    const auto start = Clock::now();
    if (encoder.dim() != cb.dim()) {
        throw InvalidArgument("localize: encoder dimension " + std::to_string(encoder.dim()) +
                              " does not match codebook dimension " + std::to_string(cb.dim()));
    }
    LocalizationEstimate est;
    auto t = Clock::now();
    const Embedding y = encoder.encode(live);
    est.timing.encode_us = micros_since(t);
    return run_pipeline(cb, prior, y, config, start, est, [&](const Embedding& best) {
        return estimate_heading(live, best, encoder, config.heading_sweep, config.heading_weighting);
    });
}

LocalizationEstimate localize_embedding(const Codebook& cb, const PlanarPose& prior, const Embedding& live,
                                        const LocalizerConfig& config)
{
    const auto start = Clock::now();
    require_dim(cb.embeddings, live, "localize_embedding");
    return run_pipeline(cb, prior, live, config, start, LocalizationEstimate{},
                        [](const Embedding&) { return HeadingEstimate{}; });
}

}  // namespace satloc
