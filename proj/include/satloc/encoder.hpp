#pragma once
// Image -> embedding functions.
//
// The localizer only needs inner products between embeddings, so any encoder
// family works behind the Encoder interface. The built-in model is a linear
// (PCA) autoencoder; embeddings produced elsewhere enter through the
// Embedding Exchange format (embedding_io.hpp).

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "satloc/image.hpp"

namespace satloc {

using Embedding = Eigen::VectorXd;

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual int dim() const = 0;
    /// Stable identifier recorded in codebooks built with this encoder.
    virtual std::string id() const = 0;
    virtual Embedding encode(const Image& img) const = 0;
};

struct PcaOptions {
    int oversample = 10;
    int power_iterations = 2;
    std::uint64_t seed = 0x5eed;
};

class LinearEncoder final : public Encoder {
public:
    LinearEncoder(int width, int height, Eigen::VectorXd mean, Eigen::MatrixXd basis);

    int dim() const override { return static_cast<int>(basis_.cols()); }
    std::string id() const override { return id_; }

    /// basis^T (flatten(img) - mean). Throws InvalidArgument on size mismatch.
    Embedding encode(const Image& img) const override;

    /// Same projection on an already-flattened image in double precision.
    Embedding encode_flat(std::span<const double> pixels) const;

    /// mean + basis e, before clamping.
    Eigen::VectorXd reconstruct(const Embedding& e) const;

    /// reconstruct() clamped to [0,1] and reshaped to an image.
    Image decode(const Embedding& e) const;

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(mean_.size()); }

    const Eigen::VectorXd& mean() const { return mean_; }
    /// pixel_count x dim, orthonormal columns (the rows of the projection).
    const Eigen::MatrixXd& basis() const { return basis_; }

    std::vector<std::uint8_t> serialize() const;
    static LinearEncoder deserialize(std::span<const std::uint8_t> bytes);
    void save(const std::filesystem::path& path) const;
    static LinearEncoder load(const std::filesystem::path& path);

private:
    int width_;
    int height_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd basis_;
    std::string id_;
};

/// Rank-`dim` principal subspace of the centred, flattened images via a
/// seeded randomized range finder. Requires at least dim + 1 images of one
/// size and dim <= pixel count.
LinearEncoder train_linear_encoder(std::span<const Image> images, int dim, const PcaOptions& opts = {});

/// Mean squared per-image reconstruction error ||x - reconstruct(encode(x))||^2.
double reconstruction_error(const LinearEncoder& model, std::span<const Image> images);

}  // namespace satloc
