#include "wsc/model.hpp"

#include "io_util.hpp"

#include "json.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace wsc {

namespace {

std::string tensor_name(std::size_t layer, const char* kind) {
    return "layer" + std::to_string(layer) + "." + kind;
}

void check_finite(const float* data, std::size_t size, const std::string& tensor_id) {
    for (std::size_t i = 0; i < size; ++i) {
        if (!std::isfinite(data[i]))
            throw invariant_error("non-finite value in " + tensor_id);
    }
}

} // namespace

const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
        case Activation::softmax_output: return "softmax-output";
    }
    throw invariant_error("unknown activation code");
}

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    if (name == "softmax-output") return Activation::softmax_output;
    throw io_error("unknown activation name: " + name);
}

std::size_t param_count(const ModelSpec& model) {
    std::size_t n = 0;
    for (const auto& layer : model.layers)
        n += static_cast<std::size_t>(layer.in_dim) * layer.out_dim + layer.out_dim;
    return n;
}

void validate(const ModelSpec& model) {
    if (model.layers.empty()) throw invariant_error("empty model");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        if (layer.in_dim == 0 || layer.out_dim == 0)
            throw invariant_error("zero-sized layer " + std::to_string(i));
        if (layer.weights.rows() != static_cast<Eigen::Index>(layer.in_dim) ||
            layer.weights.cols() != static_cast<Eigen::Index>(layer.out_dim))
            throw invariant_error("weight shape mismatch in " + tensor_name(i, "weight"));
        if (layer.bias.size() != static_cast<Eigen::Index>(layer.out_dim))
            throw invariant_error("bias shape mismatch in " + tensor_name(i, "bias"));
        if (i + 1 < model.layers.size() && layer.out_dim != model.layers[i + 1].in_dim) {
            std::ostringstream msg;
            msg << "layer dimension chain broken: layer " << i << " out_dim "
                << layer.out_dim << " != layer " << i + 1 << " in_dim "
                << model.layers[i + 1].in_dim;
            throw invariant_error(msg.str());
        }
        check_finite(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()),
                     tensor_name(i, "weight"));
        check_finite(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()),
                     tensor_name(i, "bias"));
    }
}

ParameterVector flatten(const ModelSpec& model) {
    validate(model);
    ParameterVector theta;
    theta.values.resize(static_cast<Eigen::Index>(param_count(model)));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        const std::size_t w_len = static_cast<std::size_t>(layer.weights.size());
        std::memcpy(theta.values.data() + offset, layer.weights.data(), w_len * sizeof(float));
        theta.segments.push_back({tensor_name(i, "weight"), offset, w_len});
        offset += w_len;

        const std::size_t b_len = static_cast<std::size_t>(layer.bias.size());
        std::memcpy(theta.values.data() + offset, layer.bias.data(), b_len * sizeof(float));
        theta.segments.push_back({tensor_name(i, "bias"), offset, b_len});
        offset += b_len;
    }
    return theta;
}

ModelSpec unflatten(const ParameterVector& theta, const ModelSpec& model) {
    const std::size_t expected = param_count(model);
    if (theta.size() != expected) {
        std::ostringstream msg;
        msg << "parameter length mismatch: expected N=" << expected << ", got N="
            << theta.size();
        throw invariant_error(msg.str());
    }
    ModelSpec out = model;
    std::size_t offset = 0;
    for (auto& layer : out.layers) {
        const std::size_t w_len = static_cast<std::size_t>(layer.weights.size());
        std::memcpy(layer.weights.data(), theta.values.data() + offset, w_len * sizeof(float));
        offset += w_len;
        const std::size_t b_len = static_cast<std::size_t>(layer.bias.size());
        std::memcpy(layer.bias.data(), theta.values.data() + offset, b_len * sizeof(float));
        offset += b_len;
    }
    return out;
}

void validate(const Dataset& data) {
    if (data.num_classes == 0) throw invariant_error("dataset has zero classes");
    if (data.rows() != data.labels.size())
        throw invariant_error("feature row count != label count");
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] >= data.num_classes)
            throw invariant_error("label out of range at row " + std::to_string(i));
    }
    for (Eigen::Index i = 0; i < data.features.size(); ++i) {
        if (!std::isfinite(data.features.data()[i]))
            throw invariant_error("non-finite feature value");
    }
}

namespace {

constexpr char kModelMagic[4] = {'W', 'S', 'N', 'N'};
constexpr char kDatasetMagic[4] = {'W', 'S', 'D', 'S'};
constexpr std::uint16_t kFormatVersion = 1;

ModelSpec model_from_json(const nlohmann::json& j);
Dataset dataset_from_json(const nlohmann::json& j);

} // namespace

void save_model(const ModelSpec& model, const std::filesystem::path& path) {
    validate(model);
    auto out = detail::open_out(path);
    detail::write_bytes(out, kModelMagic, 4);
    detail::write_le<std::uint16_t>(out, kFormatVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        detail::write_le<std::uint32_t>(out, layer.in_dim);
        detail::write_le<std::uint32_t>(out, layer.out_dim);
        detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
        detail::write_bytes(out, layer.weights.data(),
                            static_cast<std::size_t>(layer.weights.size()) * sizeof(float));
        detail::write_bytes(out, layer.bias.data(),
                            static_cast<std::size_t>(layer.bias.size()) * sizeof(float));
    }
    if (!out) throw io_error("write failed: " + path.string());
}

ModelSpec load_model(const std::filesystem::path& path) {
    if (!detail::has_magic(path, kModelMagic)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::read_text_file(path));
        } catch (const nlohmann::json::parse_error&) {
            throw io_error("bad magic, not a WSNN file: " + path.string());
        }
        ModelSpec model = model_from_json(j);
        try {
            validate(model);
        } catch (const invariant_error& e) {
            throw io_error(std::string("invalid model payload: ") + e.what());
        }
        return model;
    }

    auto in = detail::open_in(path);
    detail::expect_magic(in, kModelMagic, "WSNN");
    const auto version = detail::read_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion)
        throw io_error("unsupported WSNN version " + std::to_string(version));
    const auto layer_count = detail::read_le<std::uint32_t>(in, "layer_count");

    ModelSpec model;
    model.layers.resize(layer_count);
    for (auto& layer : model.layers) {
        layer.in_dim = detail::read_le<std::uint32_t>(in, "in_dim");
        layer.out_dim = detail::read_le<std::uint32_t>(in, "out_dim");
        const auto code = detail::read_le<std::uint8_t>(in, "activation");
        if (code > 2) throw io_error("unknown activation code " + std::to_string(code));
        layer.activation = static_cast<Activation>(code);
        if (layer.in_dim == 0 || layer.out_dim == 0)
            throw io_error("zero-sized layer in WSNN file");
        layer.weights.resize(layer.in_dim, layer.out_dim);
        layer.bias.resize(layer.out_dim);
        detail::read_bytes(in, layer.weights.data(),
                           static_cast<std::size_t>(layer.weights.size()) * sizeof(float),
                           "weights");
        detail::read_bytes(in, layer.bias.data(),
                           static_cast<std::size_t>(layer.bias.size()) * sizeof(float), "bias");
    }
    try {
        validate(model);
    } catch (const invariant_error& e) {
        throw io_error(std::string("invalid WSNN payload: ") + e.what());
    }
    return model;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    validate(data);
    auto out = detail::open_out(path);
    detail::write_bytes(out, kDatasetMagic, 4);
    detail::write_le<std::uint16_t>(out, kFormatVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.features.rows()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.features.cols()));
    detail::write_le<std::uint32_t>(out, data.num_classes);
    detail::write_bytes(out, data.features.data(),
                        static_cast<std::size_t>(data.features.size()) * sizeof(float));
    for (std::uint32_t label : data.labels) detail::write_le<std::uint32_t>(out, label);
    if (!out) throw io_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (!detail::has_magic(path, kDatasetMagic)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(detail::read_text_file(path));
        } catch (const nlohmann::json::parse_error&) {
            throw io_error("bad magic, not a WSDS file: " + path.string());
        }
        Dataset data = dataset_from_json(j);
        try {
            validate(data);
        } catch (const invariant_error& e) {
            throw io_error(std::string("invalid dataset payload: ") + e.what());
        }
        return data;
    }

    auto in = detail::open_in(path);
    detail::expect_magic(in, kDatasetMagic, "WSDS");
    const auto version = detail::read_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion)
        throw io_error("unsupported WSDS version " + std::to_string(version));
    const auto rows = detail::read_le<std::uint32_t>(in, "rows");
    const auto cols = detail::read_le<std::uint32_t>(in, "cols");

    Dataset data;
    data.num_classes = detail::read_le<std::uint32_t>(in, "num_classes");
    data.features.resize(rows, cols);
    detail::read_bytes(in, data.features.data(),
                       static_cast<std::size_t>(data.features.size()) * sizeof(float),
                       "features");
    data.labels.resize(rows);
    for (auto& label : data.labels) label = detail::read_le<std::uint32_t>(in, "labels");
    try {
        validate(data);
    } catch (const invariant_error& e) {
        throw io_error(std::string("invalid WSDS payload: ") + e.what());
    }
    return data;
}

namespace {

ModelSpec model_from_json(const nlohmann::json& j) {
    ModelSpec model;
    for (const auto& jl : j.at("layers")) {
        DenseLayer layer;
        layer.in_dim = jl.at("in_dim").get<std::uint32_t>();
        layer.out_dim = jl.at("out_dim").get<std::uint32_t>();
        layer.activation = activation_from_string(jl.at("activation").get<std::string>());
        layer.weights.resize(layer.in_dim, layer.out_dim);
        const auto& rows = jl.at("weights");
        if (rows.size() != layer.in_dim) throw io_error("weights row count mismatch in JSON model");
        for (std::uint32_t r = 0; r < layer.in_dim; ++r) {
            if (rows[r].size() != layer.out_dim)
                throw io_error("weights col count mismatch in JSON model");
            for (std::uint32_t c = 0; c < layer.out_dim; ++c)
                layer.weights(r, c) = rows[r][c].get<float>();
        }
        const auto& bias = jl.at("bias");
        if (bias.size() != layer.out_dim) throw io_error("bias length mismatch in JSON model");
        layer.bias.resize(layer.out_dim);
        for (std::uint32_t c = 0; c < layer.out_dim; ++c) layer.bias[c] = bias[c].get<float>();
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset data;
    data.num_classes = j.at("num_classes").get<std::uint32_t>();
    const auto& rows = j.at("features");
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows == 0 ? 0 : rows[0].size();
    data.features.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (rows[r].size() != n_cols) throw io_error("ragged feature rows in JSON dataset");
        for (std::size_t c = 0; c < n_cols; ++c)
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c].get<float>();
    }
    data.labels = j.at("labels").get<std::vector<std::uint32_t>>();
    return data;
}

nlohmann::json model_to_json(const ModelSpec& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.layers) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::uint32_t r = 0; r < layer.in_dim; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::uint32_t c = 0; c < layer.out_dim; ++c) row.push_back(layer.weights(r, c));
            rows.push_back(std::move(row));
        }
        nlohmann::json bias = nlohmann::json::array();
        for (std::uint32_t c = 0; c < layer.out_dim; ++c) bias.push_back(layer.bias[c]);
        layers.push_back({{"in_dim", layer.in_dim},
                          {"out_dim", layer.out_dim},
                          {"activation", to_string(layer.activation)},
                          {"weights", std::move(rows)},
                          {"bias", std::move(bias)}});
    }
    return {{"layers", std::move(layers)}};
}

} // namespace

void save_model_json(const ModelSpec& model, const std::filesystem::path& path) {
    validate(model);
    detail::write_text_file(path, model_to_json(model).dump(2) + "\n");
}

void save_dataset_json(const Dataset& data, const std::filesystem::path& path) {
    validate(data);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < data.features.cols(); ++c)
            row.push_back(data.features(r, c));
        rows.push_back(std::move(row));
    }
    nlohmann::json j = {{"num_classes", data.num_classes},
                        {"features", std::move(rows)},
                        {"labels", data.labels}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

} // namespace wsc
