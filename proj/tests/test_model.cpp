#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wsc/model.hpp"
#include "test_util.hpp"

#include <fstream>

using namespace wsc;

namespace {

ModelSpec one_layer_model() {
    ModelSpec model;
    DenseLayer layer;
    layer.in_dim = 2;
    layer.out_dim = 2;
    layer.weights.resize(2, 2);
    layer.weights << 1, 2, 3, 4;
    layer.bias.resize(2);
    layer.bias << 5, 6;
    layer.activation = Activation::identity;
    model.layers.push_back(layer);
    return model;
}

} // namespace

TEST_CASE("flatten orders layer weights row-major then bias") {
    const ParameterVector theta = flatten(one_layer_model());
    REQUIRE(theta.size() == 6);
    const float expected[6] = {1, 2, 3, 4, 5, 6};
    for (int i = 0; i < 6; ++i) CHECK(theta.values[i] == expected[i]);

    REQUIRE(theta.segments.size() == 2);
    CHECK(theta.segments[0].tensor_id == "layer0.weight");
    CHECK(theta.segments[0].offset == 0);
    CHECK(theta.segments[0].length == 4);
    CHECK(theta.segments[1].tensor_id == "layer0.bias");
    CHECK(theta.segments[1].offset == 4);
    CHECK(theta.segments[1].length == 2);
}

TEST_CASE("flatten rejects an empty model") {
    CHECK_THROWS_WITH_AS(flatten(ModelSpec{}), "empty model", invariant_error);
}

TEST_CASE("flatten rejects non-finite values naming the tensor") {
    ModelSpec model = one_layer_model();
    model.layers[0].bias[1] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_WITH_AS(flatten(model), "non-finite value in layer0.bias", invariant_error);
}

TEST_CASE("segments are contiguous, ordered and cover N") {
    const auto model = testing::random_model({5, 7, 4, 3}, 11);
    const ParameterVector theta = flatten(model);
    std::size_t expected_offset = 0;
    for (const Segment& segment : theta.segments) {
        CHECK(segment.offset == expected_offset);
        CHECK(segment.length > 0);
        expected_offset += segment.length;
    }
    CHECK(expected_offset == theta.size());
    CHECK(theta.size() == param_count(model));
}

TEST_CASE("unflatten inverts the trivial example") {
    const ModelSpec model = one_layer_model();
    ParameterVector theta = flatten(model);
    const ModelSpec rebuilt = unflatten(theta, model);
    CHECK(testing::models_equal(rebuilt, model));
}

TEST_CASE("unflatten reports expected vs actual N on mismatch") {
    const ModelSpec model = one_layer_model();
    ParameterVector theta = flatten(model);
    theta.values.conservativeResize(5);
    CHECK_THROWS_WITH_AS(unflatten(theta, model),
                         "parameter length mismatch: expected N=6, got N=5", invariant_error);
}

TEST_CASE("flatten/unflatten round-trips random models bit-exactly") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto model = testing::random_model({4, 9, 6, 3}, seed);
        const ParameterVector theta = flatten(model);
        const ModelSpec rebuilt = unflatten(theta, model);
        CHECK(testing::models_equal(rebuilt, model));
        // idempotence: flatten of the rebuilt model equals the original vector
        const ParameterVector theta2 = flatten(rebuilt);
        CHECK(theta2.values == theta.values);
    }
}

TEST_CASE("flatten is injective on valid models") {
    const auto model = testing::random_model({3, 5, 2}, 21);
    ModelSpec perturbed = model;
    perturbed.layers[1].weights(2, 1) += 0.25f;
    CHECK(flatten(model).values != flatten(perturbed).values);
}

TEST_CASE("model binary file round-trips bit-exactly") {
    const auto model = testing::random_model({6, 10, 4}, 3);
    testing::TempDir dir("model_io");
    const auto path = dir.path() / "m.wsnn";
    save_model(model, path);
    CHECK(testing::models_equal(load_model(path), model));
}

TEST_CASE("model loader rejects corrupted magic") {
    const auto model = testing::random_model({2, 3}, 5);
    testing::TempDir dir("model_magic");
    const auto path = dir.path() / "m.wsnn";
    save_model(model, path);
    {
        std::fstream file(path, std::ios::in | std::ios::out | std::ios::binary);
        file.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_model(path), io_error);
}

TEST_CASE("model loader rejects truncated payload") {
    const auto model = testing::random_model({4, 8, 3}, 6);
    testing::TempDir dir("model_trunc");
    const auto path = dir.path() / "m.wsnn";
    save_model(model, path);
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full - 9);
    CHECK_THROWS_AS(load_model(path), io_error);
}

TEST_CASE("model loader rejects a broken dimension chain") {
    testing::TempDir dir("model_chain");
    const auto path = dir.path() / "m.json";
    std::ofstream(path) << R"({"layers":[
      {"in_dim":4,"out_dim":3,"activation":"relu",
       "weights":[[0,0,0],[0,0,0],[0,0,0],[0,0,0]],"bias":[0,0,0]},
      {"in_dim":5,"out_dim":2,"activation":"softmax-output",
       "weights":[[0,0],[0,0],[0,0],[0,0],[0,0]],"bias":[0,0]}]})";
    CHECK_THROWS_AS(load_model(path), invariant_error);
}

TEST_CASE("model JSON mirror loads hand-written fixtures") {
    testing::TempDir dir("model_json");
    const auto path = dir.path() / "m.json";
    std::ofstream(path) << R"({"layers":[{"in_dim":2,"out_dim":2,"activation":"identity",
      "weights":[[1,2],[3,4]],"bias":[5,6]}]})";
    const ModelSpec model = load_model(path);
    CHECK(testing::models_equal(model, one_layer_model()));

    const auto json_out = dir.path() / "m2.json";
    save_model_json(model, json_out);
    CHECK(testing::models_equal(load_model(json_out), model));
}

TEST_CASE("dataset binary file round-trips bit-exactly") {
    Dataset data;
    data.num_classes = 3;
    data.features.resize(4, 2);
    data.features << 0.5f, -1.25f, 3.0f, 0.125f, -2.5f, 0.75f, 1.0f, -0.0625f;
    data.labels = {0, 1, 2, 1};

    testing::TempDir dir("dataset_io");
    const auto path = dir.path() / "d.wsds";
    save_dataset(data, path);
    const Dataset loaded = load_dataset(path);
    CHECK(loaded.num_classes == data.num_classes);
    CHECK(loaded.features == data.features);
    CHECK(loaded.labels == data.labels);

    const auto json_path = dir.path() / "d.json";
    save_dataset_json(data, json_path);
    const Dataset from_json = load_dataset(json_path);
    CHECK(from_json.features == data.features);
    CHECK(from_json.labels == data.labels);
}

TEST_CASE("dataset loader rejects out-of-range labels") {
    testing::TempDir dir("dataset_labels");
    const auto path = dir.path() / "d.json";
    std::ofstream(path) << R"({"num_classes":2,"features":[[0,0],[1,1]],"labels":[0,5]})";
    CHECK_THROWS_AS(load_dataset(path), io_error);
}

TEST_CASE("validate rejects mismatched dataset shapes") {
    Dataset data;
    data.num_classes = 2;
    data.features.resize(3, 2);
    data.features.setZero();
    data.labels = {0, 1};
    CHECK_THROWS_AS(validate(data), invariant_error);
}
