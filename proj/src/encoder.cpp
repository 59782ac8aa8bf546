#include "satloc/encoder.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cstdio>
#include <numeric>
#include <random>

#include "byteio.hpp"
#include "satloc/common.hpp"
#include "satloc/simd/kernels.hpp"

namespace satloc {
namespace {

constexpr char kModelMagic[] = "KLEN";
constexpr std::uint16_t kModelVersion = 1;

/// Orthonormal basis for the column space via Householder QR, with column
/// signs fixed so diag(R) >= 0 (deterministic and stable for inputs that are
/// already orthonormal).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

std::string make_id(int dim, std::uint32_t crc)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "linear-pca/D=%d/crc=%08x", dim, crc);
    return buf;
}

std::vector<std::uint8_t> serialize_model(int width, int height, const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& basis, bool with_crc)
{
    detail::ByteWriter w;
    w.bytes(std::string_view(kModelMagic, 4));
    w.u16(kModelVersion);
    w.u32(static_cast<std::uint32_t>(width));
    w.u32(static_cast<std::uint32_t>(height));
    w.u32(static_cast<std::uint32_t>(basis.cols()));
    for (Eigen::Index i = 0; i < mean.size(); ++i) w.f64(mean[i]);
    const double* b = basis.data();
    for (Eigen::Index i = 0; i < basis.size(); ++i) w.f64(b[i]);
    if (with_crc) w.u32(detail::crc32_of(w.buffer()));
    return std::move(w.buffer());
}

}  // namespace

LinearEncoder::LinearEncoder(int width, int height, Eigen::VectorXd mean, Eigen::MatrixXd basis)
    : width_(width), height_(height), mean_(std::move(mean)), basis_(std::move(basis))
{
    if (width <= 0 || height <= 0) throw InvalidArgument("LinearEncoder: non-positive image size");
    const auto pixels = static_cast<Eigen::Index>(width) * height;
    if (mean_.size() != pixels || basis_.rows() != pixels || basis_.cols() < 1) {
        throw InvalidArgument("LinearEncoder: mean/basis shape does not match the image size");
    }
    const auto bytes = serialize_model(width_, height_, mean_, basis_, false);
    id_ = make_id(dim(), detail::crc32_of(bytes));
}

Embedding LinearEncoder::encode(const Image& img) const
{
    if (img.width != width_ || img.height != height_) {
        throw InvalidArgument("encode: image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              ", model expects " + std::to_string(width_) + "x" + std::to_string(height_));
    }
    const auto& k = simd::kernels();
    Eigen::VectorXd centered(mean_.size());
    k.center(img.pixels.data(), mean_.data(), centered.data(), pixel_count());
    std::vector<std::size_t> cols(static_cast<std::size_t>(dim()));
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    Embedding out(dim());
    k.gather_dot(basis_.data(), pixel_count(), cols.data(), cols.size(), centered.data(), out.data());
    return out;
}

Embedding LinearEncoder::encode_flat(std::span<const double> pixels) const
{
    if (pixels.size() != pixel_count()) throw InvalidArgument("encode_flat: pixel count mismatch");
    const auto& k = simd::kernels();
    Eigen::VectorXd centered(mean_.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) centered[static_cast<Eigen::Index>(i)] = pixels[i] - mean_[static_cast<Eigen::Index>(i)];
    std::vector<std::size_t> cols(static_cast<std::size_t>(dim()));
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    Embedding out(dim());
    k.gather_dot(basis_.data(), pixel_count(), cols.data(), cols.size(), centered.data(), out.data());
    return out;
}

Eigen::VectorXd LinearEncoder::reconstruct(const Embedding& e) const
{
    if (e.size() != dim()) throw InvalidArgument("decode: embedding dimension mismatch");
    const auto& k = simd::kernels();
    Eigen::VectorXd out = mean_;
    for (int j = 0; j < dim(); ++j) {
        k.axpy(e[j], basis_.col(j).data(), out.data(), pixel_count());
    }
    return out;
}

Image LinearEncoder::decode(const Embedding& e) const
{
    const Eigen::VectorXd flat = reconstruct(e);
    Image img(width_, height_);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = static_cast<float>(std::clamp(flat[static_cast<Eigen::Index>(i)], 0.0, 1.0));
    }
    return img;
}

std::vector<std::uint8_t> LinearEncoder::serialize() const
{
    return serialize_model(width_, height_, mean_, basis_, true);
}

LinearEncoder LinearEncoder::deserialize(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes, "encoder model");
    if (r.bytes(4) != std::string_view(kModelMagic, 4)) throw FormatError("encoder model: bad magic");
    if (r.u16() != kModelVersion) throw FormatError("encoder model: unsupported version");
    const std::uint32_t width = r.u32();
    const std::uint32_t height = r.u32();
    const std::uint32_t dim = r.u32();
    const std::uint64_t pixels = std::uint64_t{width} * height;
    if (width == 0 || height == 0 || dim == 0 || pixels > (1u << 26) || dim > pixels) {
        throw FormatError("encoder model: implausible header");
    }
    const std::uint64_t payload = 8 * (pixels + pixels * dim);
    if (r.remaining() != payload + 4) throw FormatError("encoder model: size does not match header");
    const auto stored_crc_at = bytes.size() - 4;
    const std::uint32_t crc = detail::crc32_of(bytes.first(stored_crc_at));

    Eigen::VectorXd mean(static_cast<Eigen::Index>(pixels));
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] = r.f64();
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(dim));
    double* b = basis.data();
    for (Eigen::Index i = 0; i < basis.size(); ++i) b[i] = r.f64();
    if (r.u32() != crc) throw FormatError("encoder model: checksum mismatch");
    return LinearEncoder(static_cast<int>(width), static_cast<int>(height), std::move(mean), std::move(basis));
}

void LinearEncoder::save(const std::filesystem::path& path) const
{
    const auto bytes = serialize();
    detail::write_file(path, bytes);
}

LinearEncoder LinearEncoder::load(const std::filesystem::path& path)
{
    return deserialize(detail::read_file(path));
}

LinearEncoder train_linear_encoder(std::span<const Image> images, int dim, const PcaOptions& opts)
{
    if (dim < 1) throw InvalidArgument("train_linear_encoder: dim must be >= 1");
    if (images.size() < static_cast<std::size_t>(dim) + 1) {
        throw InvalidArgument("train_linear_encoder: need at least dim + 1 images (have " +
                              std::to_string(images.size()) + ", dim " + std::to_string(dim) + ")");
    }
    const int width = images.front().width;
    const int height = images.front().height;
    const Eigen::Index pixels = static_cast<Eigen::Index>(width) * height;
    if (dim > pixels) throw InvalidArgument("train_linear_encoder: dim exceeds pixel count");
    for (const Image& img : images) {
        if (img.width != width || img.height != height) {
            throw InvalidArgument("train_linear_encoder: images differ in size");
        }
    }
    const auto n = static_cast<Eigen::Index>(images.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(pixels);
    for (const Image& img : images) {
        for (Eigen::Index p = 0; p < pixels; ++p) mean[p] += img.pixels[static_cast<std::size_t>(p)];
    }
    mean /= static_cast<double>(n);

    Eigen::MatrixXd a(pixels, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Image& img = images[static_cast<std::size_t>(j)];
        for (Eigen::Index p = 0; p < pixels; ++p) a(p, j) = img.pixels[static_cast<std::size_t>(p)] - mean[p];
    }

    const Eigen::Index k = std::min<Eigen::Index>({static_cast<Eigen::Index>(dim) + opts.oversample, n, pixels});
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd omega(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = gauss(rng);
    }

    Eigen::MatrixXd q = orthonormalize(a * omega);
    for (int it = 0; it < opts.power_iterations; ++it) {
        const Eigen::MatrixXd z = orthonormalize(a.transpose() * q);
        q = orthonormalize(a * z);
    }
    const Eigen::MatrixXd small = q.transpose() * a;  // k x n
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(small, Eigen::ComputeThinU);
    Eigen::MatrixXd basis = q * svd.matrixU().leftCols(dim);
    basis = orthonormalize(basis);

    return LinearEncoder(width, height, std::move(mean), std::move(basis));
}

double reconstruction_error(const LinearEncoder& model, std::span<const Image> images)
{
    if (images.empty()) return 0.0;
    double total = 0.0;
    for (const Image& img : images) {
        const Eigen::VectorXd rec = model.reconstruct(model.encode(img));
        for (Eigen::Index p = 0; p < rec.size(); ++p) {
            const double d = img.pixels[static_cast<std::size_t>(p)] - rec[p];
            total += d * d;
        }
    }
    return total / static_cast<double>(images.size());
}

}  // namespace satloc
