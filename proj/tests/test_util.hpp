#pragma once

#include "wsc/eval.hpp"
#include "wsc/model.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace wsc::testing {

inline ModelSpec random_model(const std::vector<std::uint32_t>& arch, std::uint64_t seed,
                              float scale = 0.15f) {
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    std::normal_distribution<float> dist(0.0f, scale);
    ModelSpec model;
    for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
        DenseLayer layer;
        layer.in_dim = arch[i];
        layer.out_dim = arch[i + 1];
        layer.activation =
            (i + 2 == arch.size()) ? Activation::softmax_output : Activation::relu;
        layer.weights.resize(layer.in_dim, layer.out_dim);
        for (Eigen::Index j = 0; j < layer.weights.size(); ++j)
            layer.weights.data()[j] = dist(rng);
        layer.bias.resize(layer.out_dim);
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) layer.bias[j] = dist(rng);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

inline bool models_equal(const ModelSpec& a, const ModelSpec& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& la = a.layers[i];
        const auto& lb = b.layers[i];
        if (la.in_dim != lb.in_dim || la.out_dim != lb.out_dim ||
            la.activation != lb.activation)
            return false;
        if (la.weights != lb.weights) return false; // bit-exact
        if (la.bias != lb.bias) return false;
    }
    return true;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("wsc_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace wsc::testing
