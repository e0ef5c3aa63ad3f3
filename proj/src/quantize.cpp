#include "wsc/quantize.hpp"

#include "wsc/bitstream.hpp"
#include "io_util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wsc {

BinningRequest make_binning_request(double theta_min, double theta_max, std::uint32_t k) {
    if (k < 2) throw std::invalid_argument("bin count k must be >= 2");
    if (!(theta_min < theta_max))
        throw std::invalid_argument("degenerate parameter range: theta_min >= theta_max");
    BinningRequest request;
    request.k = k;
    request.theta_min = theta_min;
    request.theta_max = theta_max;
    request.delta = (theta_max - theta_min) / static_cast<double>(k);
    if (!(request.delta > 0.0))
        throw std::invalid_argument("degenerate parameter range: bin width is zero");
    return request;
}

std::pair<double, double> compute_range(const ParameterVector& theta) {
    if (theta.size() < 2) throw std::invalid_argument("need at least two parameters");
    float lo = theta.values[0];
    float hi = theta.values[0];
    for (Eigen::Index i = 0; i < theta.values.size(); ++i) {
        const float v = theta.values[i];
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite parameter value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) throw std::invalid_argument("degenerate parameter range: all values equal");
    return {static_cast<double>(lo), static_cast<double>(hi)};
}

std::vector<std::uint64_t> Codebook::cardinalities() const {
    std::vector<std::uint64_t> cards(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) cards[i] = bins[i].cardinality;
    return cards;
}

double Codebook::delta() const {
    if (bins.empty() || k_requested == 0) throw invariant_error("empty codebook");
    return (bins.back().upper - bins.front().lower) / static_cast<double>(k_requested);
}

Codebook uniform_bin(const ParameterVector& theta, std::uint32_t k) {
    const auto [lo, hi] = compute_range(theta);
    return uniform_bin(theta, make_binning_request(lo, hi, k));
}

Codebook uniform_bin(const ParameterVector& theta, const BinningRequest& request) {
    const std::uint32_t k = request.k;
    const double lo = request.theta_min;
    const double delta = request.delta;
    const std::size_t n = theta.size();
    if (n < 2) throw std::invalid_argument("need at least two parameters");

    // Pass 1: raw bin index per weight, b = floor((v - lo) / delta), with
    // values at theta_max clamped into bin k-1.
    std::vector<std::uint32_t> raw(n);
    std::vector<std::uint64_t> counts(k, 0);
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = static_cast<double>(theta.values[static_cast<Eigen::Index>(j)]);
        double idx = std::floor((v - lo) / delta);
        if (idx < 0.0) idx = 0.0;
        std::uint32_t b = static_cast<std::uint32_t>(idx);
        if (idx >= static_cast<double>(k)) b = k - 1;
        raw[j] = b;
        ++counts[b];
        sums[b] += v;
    }

    // Pass 2: drop empty bins, re-index survivors in order.
    std::vector<std::uint32_t> dense(k, 0);
    Codebook codebook;
    codebook.k_requested = k;
    for (std::uint32_t b = 0; b < k; ++b) {
        if (counts[b] == 0) continue;
        dense[b] = static_cast<std::uint32_t>(codebook.bins.size());
        Bin bin;
        bin.lower = lo + static_cast<double>(b) * delta;
        bin.upper = (b + 1 == k) ? request.theta_max
                                 : lo + static_cast<double>(b + 1) * delta;
        bin.cardinality = counts[b];
        bin.centroid = sums[b] / static_cast<double>(counts[b]);
        codebook.bins.push_back(bin);
    }

    codebook.indices.resize(n);
    for (std::size_t j = 0; j < n; ++j) codebook.indices[j] = dense[raw[j]];
    return codebook;
}

void validate(const Codebook& codebook, std::size_t expected_n) {
    const std::size_t d = codebook.d();
    if (d == 0) throw invariant_error("codebook has no bins");
    if (codebook.k_requested != 0 && d > codebook.k_requested)
        throw invariant_error("more bins than requested k");
    if (expected_n != 0 && codebook.n() != expected_n)
        throw invariant_error("codebook index count != N");

    std::uint64_t total = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const Bin& bin = codebook.bins[i];
        if (bin.cardinality == 0) throw invariant_error("empty bin survived removal");
        if (!(bin.lower < bin.upper)) throw invariant_error("bin interval inverted");
        if (bin.centroid < bin.lower || bin.centroid > bin.upper)
            throw invariant_error("centroid outside its bin");
        if (i + 1 < d) {
            if (!(bin.lower < codebook.bins[i + 1].lower))
                throw invariant_error("bins not sorted by lower bound");
            if (bin.upper > codebook.bins[i + 1].lower)
                throw invariant_error("bin intervals overlap");
        }
        total += bin.cardinality;
    }
    if (total != codebook.n()) throw invariant_error("cardinality sum != N");

    std::vector<std::uint64_t> histogram(d, 0);
    for (std::uint32_t index : codebook.indices) {
        if (index >= d) throw invariant_error("bin index out of range");
        ++histogram[index];
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (histogram[i] != codebook.bins[i].cardinality)
            throw invariant_error("index histogram != cardinalities");
    }
}

ParameterVector reconstruct_values(const ParameterVector& theta, const Codebook& codebook) {
    if (codebook.n() != theta.size()) {
        std::ostringstream msg;
        msg << "codebook built for N=" << codebook.n() << ", theta has N=" << theta.size();
        throw std::invalid_argument(msg.str());
    }
    const std::size_t d = codebook.d();
    ParameterVector out;
    out.segments = theta.segments;
    out.values.resize(theta.values.size());
    for (std::size_t j = 0; j < codebook.n(); ++j) {
        const std::uint32_t index = codebook.indices[j];
        if (index >= d)
            throw std::invalid_argument("bin index out of range [0, d) at position " +
                                        std::to_string(j));
        out.values[static_cast<Eigen::Index>(j)] =
            static_cast<float>(codebook.bins[index].centroid);
    }
    return out;
}

QuantizedModel reconstruct(const ParameterVector& theta, const Codebook& codebook) {
    QuantizedModel result;
    result.reconstructed = reconstruct_values(theta, codebook);
    result.codebook = codebook;
    return result;
}

namespace {

constexpr char kCodebookMagic[4] = {'W', 'S', 'C', 'B'};
constexpr std::uint16_t kFormatVersion = 1;

unsigned index_stream_bits(std::size_t d) {
    unsigned bits = 0;
    while ((std::size_t{1} << bits) < d) ++bits;
    return bits; // ceil(log2 d); 0 for d == 1
}

Codebook codebook_from_json(const nlohmann::json& j) {
    Codebook codebook;
    codebook.k_requested = j.at("k_requested").get<std::uint32_t>();
    for (const auto& jb : j.at("bins")) {
        Bin bin;
        bin.lower = jb.at("lower").get<double>();
        bin.upper = jb.at("upper").get<double>();
        bin.centroid = jb.at("centroid").get<double>();
        bin.cardinality = jb.at("cardinality").get<std::uint64_t>();
        codebook.bins.push_back(bin);
    }
    codebook.indices = j.at("indices").get<std::vector<std::uint32_t>>();
    return codebook;
}

} // namespace

void save_codebook(const Codebook& codebook, const std::filesystem::path& path) {
    validate(codebook);
    auto out = detail::open_out(path);
    detail::write_bytes(out, kCodebookMagic, 4);
    detail::write_le<std::uint16_t>(out, kFormatVersion);
    detail::write_le<std::uint32_t>(out, codebook.k_requested);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(codebook.d()));
    detail::write_le<std::uint64_t>(out, codebook.n());
    for (const Bin& bin : codebook.bins) {
        detail::write_le<double>(out, bin.lower);
        detail::write_le<double>(out, bin.upper);
        detail::write_le<double>(out, bin.centroid);
        detail::write_le<std::uint64_t>(out, bin.cardinality);
    }
    const unsigned bits = index_stream_bits(codebook.d());
    BitWriter writer;
    for (std::uint32_t index : codebook.indices) writer.put(index, bits);
    const auto payload = writer.take();
    detail::write_bytes(out, payload.data(), payload.size());
    if (!out) throw io_error("write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
    if (!detail::has_magic(path, kCodebookMagic)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::read_text_file(path));
        } catch (const nlohmann::json::parse_error&) {
            throw io_error("bad magic, not a WSCB file: " + path.string());
        }
        Codebook codebook = codebook_from_json(j);
        validate(codebook);
        return codebook;
    }

    auto in = detail::open_in(path);
    detail::expect_magic(in, kCodebookMagic, "WSCB");
    const auto version = detail::read_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion)
        throw io_error("unsupported WSCB version " + std::to_string(version));

    Codebook codebook;
    codebook.k_requested = detail::read_le<std::uint32_t>(in, "k_requested");
    const auto d = detail::read_le<std::uint32_t>(in, "d");
    const auto n = detail::read_le<std::uint64_t>(in, "N");
    codebook.bins.resize(d);
    for (Bin& bin : codebook.bins) {
        bin.lower = detail::read_le<double>(in, "lower");
        bin.upper = detail::read_le<double>(in, "upper");
        bin.centroid = detail::read_le<double>(in, "centroid");
        bin.cardinality = detail::read_le<std::uint64_t>(in, "cardinality");
    }
    const unsigned bits = index_stream_bits(d);
    const std::size_t payload_bytes = static_cast<std::size_t>((n * bits + 7) / 8);
    std::vector<std::uint8_t> payload(payload_bytes);
    if (payload_bytes > 0)
        detail::read_bytes(in, payload.data(), payload_bytes, "index stream");
    BitReader reader(payload);
    codebook.indices.resize(static_cast<std::size_t>(n));
    for (auto& index : codebook.indices)
        index = static_cast<std::uint32_t>(reader.get(bits));
    try {
        validate(codebook);
    } catch (const invariant_error& e) {
        throw io_error(std::string("invalid WSCB payload: ") + e.what());
    }
    return codebook;
}

void save_codebook_json(const Codebook& codebook, const std::filesystem::path& path) {
    validate(codebook);
    nlohmann::json bins = nlohmann::json::array();
    for (const Bin& bin : codebook.bins) {
        bins.push_back({{"lower", bin.lower},
                        {"upper", bin.upper},
                        {"centroid", bin.centroid},
                        {"cardinality", bin.cardinality}});
    }
    nlohmann::json j = {{"k_requested", codebook.k_requested},
                        {"d", codebook.d()},
                        {"n", codebook.n()},
                        {"bins", std::move(bins)},
                        {"indices", codebook.indices}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

} // namespace wsc
