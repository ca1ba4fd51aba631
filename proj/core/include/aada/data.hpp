#pragma once

#include "aada/matrix.hpp"
#include "aada/nn.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace aada {

enum class DomainTag { Source, Target };

std::string_view to_string(DomainTag t) noexcept;

struct DomainDataset {
    Matrix features;
    std::vector<Label> labels;
    DomainTag domain = DomainTag::Source;
    std::string provenance;
    std::size_t num_classes = 0;
    /// Image geometry for IDX-backed data; 0 for synthetic data.
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;

    std::size_t size() const noexcept { return labels.size(); }
    /// Throws unless features are finite, labels lie in [0, num_classes) and counts agree.
    void validate() const;
    DomainDataset subset(const std::vector<std::size_t>& rows) const;
};

// ---- synthetic covariate shift -----------------------------------------------------

enum class Generator { TwoMoons, GaussianMixture };

std::string_view to_string(Generator g) noexcept;
Generator generator_from_string(std::string_view name);

/// Target = rigid transform of the source distribution: rotation by `rotation_deg` about the
/// generator's center, then translation.
struct ShiftSpec {
    Generator generator = Generator::TwoMoons;
    std::size_t n_source = 2000;
    std::size_t n_target = 2000;
    double rotation_deg = 30.0;
    std::array<double, 2> translation{0.5, 0.0};
    double noise = 0.15;
    std::uint64_t seed = 0;
    /// Only used by GaussianMixture; two_moons always has two classes.
    std::size_t num_classes = 2;

    void validate() const;
    friend bool operator==(const ShiftSpec&, const ShiftSpec&) = default;
};

/// Fixed point of the rotation: the center of the moons' bounding box, or the origin.
std::array<double, 2> rotation_center(Generator g) noexcept;
std::array<double, 2> apply_shift(const ShiftSpec& spec, std::array<double, 2> p) noexcept;
std::array<double, 2> invert_shift(const ShiftSpec& spec, std::array<double, 2> p) noexcept;

struct ShiftedPair {
    DomainDataset source;
    DomainDataset target;
};

/// Pure function of `spec` (seed included).
ShiftedPair gen_shifted_pair(const ShiftSpec& spec);

// ---- IDX -----------------------------------------------------------------------------

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

/// Images scaled to [0, 1] and flattened row-major. Throws IdxBadMagic, IdxTruncated or
/// IdxCountMismatch.
DomainDataset load_idx(const std::string& images_path, const std::string& labels_path,
                       DomainTag domain = DomainTag::Target);

/// Inverse of `load_idx`: pixels are `round(255 * x)`.
void write_idx(const DomainDataset& data, const std::string& images_path,
               const std::string& labels_path);

// ---- normalisation and splitting --------------------------------------------------------

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd; ///< already floored at kSdFloor

    static constexpr double kSdFloor = 1e-8;

    static Standardizer fit(const Matrix& reference);
    Matrix apply(const Matrix& x) const;
    void apply_in_place(DomainDataset& d) const { d.features = apply(d.features); }

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Fits on `reference` and applies to it and to every dataset in `others`.
Standardizer standardize(DomainDataset& reference, std::initializer_list<DomainDataset*> others = {});

struct TargetSplit {
    DomainDataset pool;
    DomainDataset test;
    /// Row of the original dataset each pool / test row came from.
    std::vector<std::size_t> pool_origin;
    std::vector<std::size_t> test_origin;
};

/// Seeded shuffle, then the first (1 - test_fraction) share becomes the pool.
TargetSplit split_target(const DomainDataset& target, double test_fraction, std::uint64_t seed);

/// Uniform subsample without replacement, order preserved. n >= size returns a copy.
DomainDataset subsample(const DomainDataset& d, std::size_t n, std::uint64_t seed);

} // namespace aada
