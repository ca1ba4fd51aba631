#include "aada/data.hpp"

#include "aada/errors.hpp"
#include "aada/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

namespace aada {

std::string_view to_string(DomainTag t) noexcept {
    return t == DomainTag::Source ? "source" : "target";
}

void DomainDataset::validate() const {
    if (features.rows() != labels.size()) {
        throw DimensionError("DomainDataset", std::to_string(features.rows()) + " rows but " +
                                                  std::to_string(labels.size()) + " labels");
    }
    if (!features.is_finite()) throw Error("DomainDataset: non-finite feature value");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw LabelError("DomainDataset: label " + std::to_string(labels[i]) + " at row " +
                             std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

DomainDataset DomainDataset::subset(const std::vector<std::size_t>& rows) const {
    DomainDataset out = *this;
    out.features = features.gather_rows(rows);
    out.labels.clear();
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(labels.at(r));
    return out;
}

// ---- generators -----------------------------------------------------------------------

std::string_view to_string(Generator g) noexcept {
    return g == Generator::TwoMoons ? "two_moons" : "gaussian_mixture";
}

Generator generator_from_string(std::string_view name) {
    if (name == "two_moons") return Generator::TwoMoons;
    if (name == "gaussian_mixture") return Generator::GaussianMixture;
    throw Error("unknown generator '" + std::string(name) +
                "' (expected two_moons or gaussian_mixture)");
}

void ShiftSpec::validate() const {
    if (!(noise > 0.0)) throw Error("ShiftSpec: noise scale must be positive");
    if (n_source == 0 || n_target == 0) throw Error("ShiftSpec: sample counts must be positive");
    if (generator == Generator::GaussianMixture && num_classes < 2) {
        throw Error("ShiftSpec: gaussian_mixture needs at least two classes");
    }
    if (!std::isfinite(rotation_deg) || !std::isfinite(translation[0]) ||
        !std::isfinite(translation[1])) {
        throw Error("ShiftSpec: rotation and translation must be finite");
    }
}

std::array<double, 2> rotation_center(Generator g) noexcept {
    // Moons span x in [-1, 2], y in [-0.5, 1].
    return g == Generator::TwoMoons ? std::array<double, 2>{0.5, 0.25}
                                    : std::array<double, 2>{0.0, 0.0};
}

std::array<double, 2> apply_shift(const ShiftSpec& spec, std::array<double, 2> p) noexcept {
    const auto c = rotation_center(spec.generator);
    const double a = spec.rotation_deg * std::numbers::pi / 180.0;
    const double dx = p[0] - c[0];
    const double dy = p[1] - c[1];
    return {c[0] + std::cos(a) * dx - std::sin(a) * dy + spec.translation[0],
            c[1] + std::sin(a) * dx + std::cos(a) * dy + spec.translation[1]};
}

std::array<double, 2> invert_shift(const ShiftSpec& spec, std::array<double, 2> p) noexcept {
    const auto c = rotation_center(spec.generator);
    const double a = spec.rotation_deg * std::numbers::pi / 180.0;
    const double dx = p[0] - spec.translation[0] - c[0];
    const double dy = p[1] - spec.translation[1] - c[1];
    return {c[0] + std::cos(a) * dx + std::sin(a) * dy, c[1] - std::sin(a) * dx + std::cos(a) * dy};
}

namespace {

DomainDataset sample_base(const ShiftSpec& spec, std::size_t n, Rng& rng) {
    const std::size_t classes = spec.generator == Generator::TwoMoons ? 2 : spec.num_classes;
    DomainDataset d;
    d.num_classes = classes;
    d.features = Matrix(n, 2);
    d.labels.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const auto label = static_cast<Label>(k % classes);
        double x = 0.0;
        double y = 0.0;
        if (spec.generator == Generator::TwoMoons) {
            const double t = rng.uniform(0.0, std::numbers::pi);
            if (label == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
        } else {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) /
                                 static_cast<double>(classes);
            x = 2.0 * std::cos(angle);
            y = 2.0 * std::sin(angle);
        }
        d.features(i, 0) = x + rng.normal(0.0, spec.noise);
        d.features(i, 1) = y + rng.normal(0.0, spec.noise);
        d.labels[i] = label;
    }
    return d;
}

std::string describe(const ShiftSpec& spec) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%s n_source=%zu n_target=%zu rotation_deg=%.17g translation=(%.17g,%.17g) "
                  "noise=%.17g seed=%llu",
                  std::string(to_string(spec.generator)).c_str(), spec.n_source, spec.n_target,
                  spec.rotation_deg, spec.translation[0], spec.translation[1], spec.noise,
                  static_cast<unsigned long long>(spec.seed));
    return buf;
}

} // namespace

ShiftedPair gen_shifted_pair(const ShiftSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Rng source_rng = root.derive(1);
    Rng target_rng = root.derive(2);
    ShiftedPair pair;
    pair.source = sample_base(spec, spec.n_source, source_rng);
    pair.source.domain = DomainTag::Source;
    pair.source.provenance = "synthetic source: " + describe(spec);
    pair.target = sample_base(spec, spec.n_target, target_rng);
    pair.target.domain = DomainTag::Target;
    pair.target.provenance = "synthetic target: " + describe(spec);
    for (std::size_t i = 0; i < pair.target.size(); ++i) {
        const auto p = apply_shift(spec, {pair.target.features(i, 0), pair.target.features(i, 1)});
        pair.target.features(i, 0) = p[0];
        pair.target.features(i, 1) = p[1];
    }
    return pair;
}

// ---- IDX --------------------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(const std::vector<std::uint8_t>& bytes, std::uint32_t expected,
                 const std::string& path) {
    if (bytes.size() < 4) throw IdxTruncated(path + ": shorter than the IDX magic number");
    const std::uint32_t magic = be32(bytes, 0);
    if (magic != expected) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ": bad magic 0x%08x, expected 0x%08x", magic, expected);
        throw IdxBadMagic(path + buf);
    }
}

void write_all(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path + "'");
}

} // namespace

IdxImages read_idx_images(const std::string& path) {
    const auto bytes = read_all(path);
    check_magic(bytes, kIdxImagesMagic, path);
    if (bytes.size() < 16) throw IdxTruncated(path + ": header shorter than 16 bytes");
    IdxImages img;
    img.count = be32(bytes, 4);
    img.rows = be32(bytes, 8);
    img.cols = be32(bytes, 12);
    const std::size_t expected = img.count * img.rows * img.cols;
    const std::size_t payload = bytes.size() - 16;
    if (payload < expected) {
        throw IdxTruncated(path + ": payload has " + std::to_string(payload) + " bytes, header implies " +
                           std::to_string(expected));
    }
    if (payload > expected) {
        throw IdxCountMismatch(path + ": " + std::to_string(payload - expected) +
                               " bytes beyond the " + std::to_string(img.count) +
                               " images declared in the header");
    }
    img.pixels.assign(bytes.begin() + 16, bytes.end());
    return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    const auto bytes = read_all(path);
    check_magic(bytes, kIdxLabelsMagic, path);
    if (bytes.size() < 8) throw IdxTruncated(path + ": header shorter than 8 bytes");
    const std::size_t count = be32(bytes, 4);
    const std::size_t payload = bytes.size() - 8;
    if (payload < count) {
        throw IdxTruncated(path + ": payload has " + std::to_string(payload) + " labels, header declares " +
                           std::to_string(count));
    }
    if (payload > count) {
        throw IdxCountMismatch(path + ": " + std::to_string(payload - count) +
                               " bytes beyond the " + std::to_string(count) +
                               " labels declared in the header");
    }
    return {bytes.begin() + 8, bytes.end()};
}

DomainDataset load_idx(const std::string& images_path, const std::string& labels_path,
                       DomainTag domain) {
    const auto img = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (labels.size() != img.count) {
        throw IdxCountMismatch(images_path + " has " + std::to_string(img.count) + " images but " +
                               labels_path + " has " + std::to_string(labels.size()) + " labels");
    }
    DomainDataset d;
    d.domain = domain;
    d.image_rows = img.rows;
    d.image_cols = img.cols;
    d.features = Matrix(img.count, img.rows * img.cols);
    auto values = d.features.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = img.pixels[i] / 255.0;
    d.labels.assign(labels.begin(), labels.end());
    int max_label = -1;
    for (auto l : d.labels) max_label = std::max(max_label, l);
    d.num_classes = static_cast<std::size_t>(max_label + 1);
    d.provenance = "idx: " + images_path + " + " + labels_path + " (pixels / 255)";
    return d;
}

void write_idx(const DomainDataset& data, const std::string& images_path,
               const std::string& labels_path) {
    if (data.image_rows * data.image_cols != data.features.cols()) {
        throw DimensionError("write_idx", "image geometry does not match feature width");
    }
    std::vector<std::uint8_t> img;
    img.reserve(16 + data.features.size());
    put_be32(img, kIdxImagesMagic);
    put_be32(img, static_cast<std::uint32_t>(data.size()));
    put_be32(img, static_cast<std::uint32_t>(data.image_rows));
    put_be32(img, static_cast<std::uint32_t>(data.image_cols));
    for (double v : data.features.values()) {
        img.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)));
    }
    std::vector<std::uint8_t> lab;
    lab.reserve(8 + data.size());
    put_be32(lab, kIdxLabelsMagic);
    put_be32(lab, static_cast<std::uint32_t>(data.size()));
    for (auto l : data.labels) lab.push_back(static_cast<std::uint8_t>(l));
    write_all(images_path, img);
    write_all(labels_path, lab);
}

// ---- standardisation ---------------------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& reference) {
    if (reference.rows() == 0) throw Error("Standardizer::fit: empty reference set");
    Standardizer s;
    const std::size_t d = reference.cols();
    const double n = static_cast<double>(reference.rows());
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    for (std::size_t r = 0; r < reference.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += reference(r, c);
    }
    for (auto& m : s.mean) m /= n;
    for (std::size_t r = 0; r < reference.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dv = reference(r, c) - s.mean[c];
            s.sd[c] += dv * dv;
        }
    }
    for (auto& v : s.sd) v = std::max(std::sqrt(v / n), kSdFloor);
    return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
        throw DimensionError("Standardizer::apply", "fitted on " + std::to_string(mean.size()) +
                                                        " features, got " + std::to_string(x.cols()));
    }
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / sd[c];
    }
    return out;
}

Standardizer standardize(DomainDataset& reference, std::initializer_list<DomainDataset*> others) {
    const auto s = Standardizer::fit(reference.features);
    s.apply_in_place(reference);
    for (auto* d : others) s.apply_in_place(*d);
    return s;
}

TargetSplit split_target(const DomainDataset& target, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("split_target: test_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(target.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(target.size())));
    TargetSplit s;
    s.pool_origin.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
    s.test_origin.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
    s.pool = target.subset(s.pool_origin);
    s.test = target.subset(s.test_origin);
    s.pool.provenance += " [pool]";
    s.test.provenance += " [test]";
    return s;
}

DomainDataset subsample(const DomainDataset& d, std::size_t n, std::uint64_t seed) {
    if (n >= d.size()) return d;
    Rng rng(seed);
    auto rows = rng.sample_without_replacement(d.size(), n);
    std::sort(rows.begin(), rows.end());
    DomainDataset out = d.subset(rows);
    out.provenance += " [subsample " + std::to_string(n) + " seed " + std::to_string(seed) + "]";
    return out;
}

} // namespace aada
