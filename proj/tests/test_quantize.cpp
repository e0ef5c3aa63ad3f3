#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wsc/quantize.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

using namespace wsc;

namespace {

ParameterVector make_theta(std::vector<float> values) {
    ParameterVector theta;
    theta.values = Eigen::Map<VectorF>(values.data(), static_cast<Eigen::Index>(values.size()));
    theta.segments = {{"values", 0, values.size()}};
    return theta;
}

ParameterVector random_theta(std::size_t n, std::uint64_t seed, float lo = -2.0f,
                             float hi = 2.0f) {
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> values(n);
    for (auto& v : values) v = dist(rng);
    return make_theta(std::move(values));
}

// Independent route: assign each weight by scanning every interval
// [lo + i*delta, lo + (i+1)*delta), last interval closed at theta_max.
Codebook brute_force_bin(const ParameterVector& theta, std::uint32_t k) {
    const auto [lo, hi] = compute_range(theta);
    const double delta = (hi - lo) / k;
    const std::size_t n = theta.size();

    std::vector<std::uint32_t> raw(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = theta.values[static_cast<Eigen::Index>(j)];
        std::uint32_t assigned = k - 1; // theta_max lands in the closed last bin
        for (std::uint32_t i = 0; i < k; ++i) {
            const double lower = lo + i * delta;
            const double upper = lo + (i + 1) * delta;
            if (v >= lower && (v < upper || (i + 1 == k && v <= hi))) {
                assigned = i;
                break;
            }
        }
        raw[j] = assigned;
    }

    std::vector<std::uint64_t> counts(k, 0);
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        ++counts[raw[j]];
        sums[raw[j]] += theta.values[static_cast<Eigen::Index>(j)];
    }

    Codebook codebook;
    codebook.k_requested = k;
    std::vector<std::uint32_t> dense(k, 0);
    for (std::uint32_t i = 0; i < k; ++i) {
        if (counts[i] == 0) continue;
        dense[i] = static_cast<std::uint32_t>(codebook.bins.size());
        Bin bin;
        bin.lower = lo + i * delta;
        bin.upper = (i + 1 == k) ? hi : lo + (i + 1) * delta;
        bin.cardinality = counts[i];
        bin.centroid = sums[i] / static_cast<double>(counts[i]);
        codebook.bins.push_back(bin);
    }
    codebook.indices.resize(n);
    for (std::size_t j = 0; j < n; ++j) codebook.indices[j] = dense[raw[j]];
    return codebook;
}

bool codebooks_match(const Codebook& a, const Codebook& b) {
    if (a.d() != b.d() || a.indices != b.indices) return false;
    for (std::size_t i = 0; i < a.d(); ++i) {
        if (a.bins[i].cardinality != b.bins[i].cardinality) return false;
        if (a.bins[i].lower != doctest::Approx(b.bins[i].lower).epsilon(1e-12)) return false;
        if (a.bins[i].upper != doctest::Approx(b.bins[i].upper).epsilon(1e-12)) return false;
        if (a.bins[i].centroid != doctest::Approx(b.bins[i].centroid).epsilon(1e-12))
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("compute_range finds exact min and max") {
    const auto [lo, hi] = compute_range(make_theta({-1.5f, 0.0f, 2.5f}));
    CHECK(lo == -1.5);
    CHECK(hi == 2.5);
}

TEST_CASE("compute_range rejects a constant vector") {
    CHECK_THROWS_AS(compute_range(make_theta({3, 3, 3})), std::invalid_argument);
}

TEST_CASE("compute_range matches a naive scan on a large random vector") {
    const auto theta = random_theta(100000, 17);
    float lo = theta.values[0], hi = theta.values[0];
    for (Eigen::Index i = 0; i < theta.values.size(); ++i) {
        lo = std::min(lo, theta.values[i]);
        hi = std::max(hi, theta.values[i]);
    }
    const auto [got_lo, got_hi] = compute_range(theta);
    CHECK(got_lo == static_cast<double>(lo));
    CHECK(got_hi == static_cast<double>(hi));
}

TEST_CASE("uniform_bin quantizes [0,1,2,3] with k=2") {
    const Codebook codebook = uniform_bin(make_theta({0, 1, 2, 3}), 2);
    REQUIRE(codebook.d() == 2);
    CHECK(codebook.delta() == doctest::Approx(1.5));
    CHECK(codebook.bins[0].cardinality == 2);
    CHECK(codebook.bins[0].centroid == doctest::Approx(0.5));
    CHECK(codebook.bins[1].cardinality == 2); // 3 clamped from raw index 2
    CHECK(codebook.bins[1].centroid == doctest::Approx(2.5));
    CHECK(codebook.indices == std::vector<std::uint32_t>{0, 0, 1, 1});
    validate(codebook, 4);
}

TEST_CASE("uniform_bin removes empty bins and re-indexes densely") {
    const Codebook codebook = uniform_bin(make_theta({0, 10}), 5);
    REQUIRE(codebook.d() == 2);
    CHECK(codebook.bins[0].centroid == doctest::Approx(0.0));
    CHECK(codebook.bins[1].centroid == doctest::Approx(10.0));
    CHECK(codebook.bins[0].lower == doctest::Approx(0.0));
    CHECK(codebook.bins[0].upper == doctest::Approx(2.0));
    CHECK(codebook.bins[1].lower == doctest::Approx(8.0));
    CHECK(codebook.bins[1].upper == doctest::Approx(10.0));
    CHECK(codebook.indices == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("k = N on uniformly spaced values is the identity quantization") {
    std::vector<float> values(16);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(i);
    const auto theta = make_theta(values);
    const Codebook codebook = uniform_bin(theta, 16);
    CHECK(codebook.d() == 16);
    const auto quantized = reconstruct(theta, codebook);
    CHECK(quantized.reconstructed.values == theta.values);
}

TEST_CASE("uniform_bin validates its inputs") {
    CHECK_THROWS_AS(uniform_bin(make_theta({0, 1}), 1), std::invalid_argument);
    CHECK_THROWS_AS(uniform_bin(make_theta({2, 2, 2}), 4), std::invalid_argument);
}

TEST_CASE("interior boundary values go to the upper bin") {
    // delta = 1 with range [0, 4]: the values 1 and 2 sit exactly on
    // boundaries and floor semantics place them in bins 1 and 2.
    const Codebook codebook = uniform_bin(make_theta({0, 1, 2, 4}), 4);
    REQUIRE(codebook.d() == 4); // bin for [3,4) holds the clamped max only
    CHECK(codebook.indices == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("reconstruct maps every weight to its bin centroid") {
    const auto theta = make_theta({0, 1, 2, 3});
    const Codebook codebook = uniform_bin(theta, 2);
    const QuantizedModel quantized = reconstruct(theta, codebook);
    const float expected[4] = {0.5f, 0.5f, 2.5f, 2.5f};
    for (int i = 0; i < 4; ++i) CHECK(quantized.reconstructed.values[i] == expected[i]);
    CHECK(theta.values[0] == 0.0f); // original untouched
}

TEST_CASE("reconstruct rejects out-of-range indices") {
    const auto theta = make_theta({0, 1, 2, 3});
    Codebook codebook = uniform_bin(theta, 2);
    codebook.indices[1] = 7;
    CHECK_THROWS_AS(reconstruct(theta, codebook), std::invalid_argument);
}

TEST_CASE("quantization error stays strictly below delta") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const auto theta = random_theta(200 + rng() % 500, rng());
        const std::uint32_t k = 2 + rng() % 60;
        const Codebook codebook = uniform_bin(theta, k);
        const double delta = codebook.delta();
        const auto quantized = reconstruct(theta, codebook);
        for (Eigen::Index j = 0; j < theta.values.size(); ++j) {
            const double err = std::abs(static_cast<double>(theta.values[j]) -
                                        quantized.reconstructed.values[j]);
            REQUIRE(err < delta);
        }
    }
}

TEST_CASE("uniform_bin matches the brute-force interval oracle") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 50 + rng() % 951;
        const std::uint32_t k = 2 + rng() % 63;
        const auto theta = random_theta(n, rng());
        const Codebook fast = uniform_bin(theta, k);
        const Codebook oracle = brute_force_bin(theta, k);
        REQUIRE(codebooks_match(fast, oracle));
        validate(fast, n);
    }
}

TEST_CASE("partition invariant: cardinalities sum to N") {
    const auto theta = random_theta(5000, 7);
    const Codebook codebook = uniform_bin(theta, 128);
    const auto cards = codebook.cardinalities();
    CHECK(std::accumulate(cards.begin(), cards.end(), std::uint64_t{0}) == theta.size());
}

TEST_CASE("permuting theta permutes indices and leaves bins unchanged") {
    const std::size_t n = 800;
    const auto theta = random_theta(n, 31);
    const std::uint32_t k = 24;
    const Codebook base = uniform_bin(theta, k);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 rng(5);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);

    ParameterVector shuffled = theta;
    for (std::size_t i = 0; i < n; ++i)
        shuffled.values[static_cast<Eigen::Index>(i)] =
            theta.values[static_cast<Eigen::Index>(perm[i])];

    const Codebook permuted = uniform_bin(shuffled, k);
    REQUIRE(permuted.d() == base.d());
    for (std::size_t i = 0; i < base.d(); ++i) {
        CHECK(permuted.bins[i].cardinality == base.bins[i].cardinality);
        CHECK(permuted.bins[i].centroid == doctest::Approx(base.bins[i].centroid));
    }
    for (std::size_t i = 0; i < n; ++i) CHECK(permuted.indices[i] == base.indices[perm[i]]);
}

TEST_CASE("codebook file round-trips through WSCB and JSON") {
    const auto theta = random_theta(300, 8);
    const Codebook codebook = uniform_bin(theta, 17);
    testing::TempDir dir("codebook_io");

    const auto binary_path = dir.path() / "c.wscb";
    save_codebook(codebook, binary_path);
    const Codebook loaded = load_codebook(binary_path);
    CHECK(loaded.k_requested == codebook.k_requested);
    CHECK(loaded.indices == codebook.indices);
    REQUIRE(loaded.d() == codebook.d());
    for (std::size_t i = 0; i < codebook.d(); ++i) {
        CHECK(loaded.bins[i].lower == codebook.bins[i].lower); // f64 fields, bit-exact
        CHECK(loaded.bins[i].upper == codebook.bins[i].upper);
        CHECK(loaded.bins[i].centroid == codebook.bins[i].centroid);
        CHECK(loaded.bins[i].cardinality == codebook.bins[i].cardinality);
    }

    const auto json_path = dir.path() / "c.json";
    save_codebook_json(codebook, json_path);
    const Codebook from_json = load_codebook(json_path);
    CHECK(from_json.indices == codebook.indices);
    CHECK(from_json.d() == codebook.d());
}

TEST_CASE("codebook loader rejects corrupted payloads") {
    const auto theta = random_theta(64, 9);
    const Codebook codebook = uniform_bin(theta, 8);
    testing::TempDir dir("codebook_bad");
    const auto path = dir.path() / "c.wscb";
    save_codebook(codebook, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS(load_codebook(path), io_error);
}

TEST_CASE("binning is roughly linear in N" * doctest::skip(false)) {
    const std::uint32_t k = 64;
    auto time_once = [&](std::size_t n) {
        const auto theta = random_theta(n, 123);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            const Codebook codebook = uniform_bin(theta, k);
            const auto stop = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(stop - start).count());
            CHECK(codebook.n() == n);
        }
        return best;
    };
    const double t1 = time_once(1u << 20);
    const double t2 = time_once(1u << 21);
    CHECK(t2 / t1 < 3.0);
}
