#include "wsc/eval.hpp"

#include "io_util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace wsc {

MatrixF forward_logits(const ModelSpec& model, const MatrixF& features) {
    if (model.layers.empty()) throw invariant_error("empty model");
    if (features.cols() != static_cast<Eigen::Index>(model.layers.front().in_dim)) {
        std::ostringstream msg;
        msg << "feature width " << features.cols() << " != model input dim "
            << model.layers.front().in_dim;
        throw std::invalid_argument(msg.str());
    }
    MatrixF activations = features;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const DenseLayer& layer = model.layers[i];
        MatrixF z = activations * layer.weights;
        z.rowwise() += layer.bias.transpose();
        if (layer.activation == Activation::relu)
            z = z.cwiseMax(0.0f);
        // identity and softmax-output both pass logits through; softmax is
        // monotone, so the argmax downstream is unaffected.
        activations = std::move(z);
    }
    return activations;
}

std::vector<std::uint32_t> forward(const ModelSpec& model, const MatrixF& features) {
    const MatrixF logits = forward_logits(model, features);
    std::vector<std::uint32_t> predictions(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        std::uint32_t best = 0;
        float best_value = logits(r, 0);
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(r, c) > best_value) { // ties keep the lowest index
                best_value = logits(r, c);
                best = static_cast<std::uint32_t>(c);
            }
        }
        predictions[static_cast<std::size_t>(r)] = best;
    }
    return predictions;
}

EvalReport macro_f1(const std::vector<std::uint32_t>& predictions,
                    const std::vector<std::uint32_t>& labels, std::uint32_t num_classes) {
    if (predictions.empty()) throw std::invalid_argument("empty prediction set");
    if (predictions.size() != labels.size())
        throw std::invalid_argument("prediction/label length mismatch");
    if (num_classes == 0) throw std::invalid_argument("num_classes must be positive");

    std::vector<std::uint64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::uint32_t p = predictions[i];
        const std::uint32_t y = labels[i];
        if (p >= num_classes || y >= num_classes)
            throw std::invalid_argument("class index out of range");
        if (p == y) {
            ++tp[y];
            ++correct;
        } else {
            ++fp[p];
            ++fn[y];
        }
    }

    EvalReport report;
    report.samples = predictions.size();
    report.top1 = static_cast<double>(correct) / static_cast<double>(predictions.size());
    report.per_class.resize(num_classes);
    double f1_sum = 0.0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        ClassScore& score = report.per_class[c];
        score.support = tp[c] + fn[c];
        score.absent = (tp[c] + fn[c] + fp[c]) == 0;
        const std::uint64_t p_den = tp[c] + fp[c];
        const std::uint64_t r_den = tp[c] + fn[c];
        score.precision = p_den == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(p_den);
        score.recall = r_den == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(r_den);
        const double pr = score.precision + score.recall;
        score.f1 = pr == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / pr;
        f1_sum += score.f1;
    }
    report.f1 = f1_sum / static_cast<double>(num_classes);
    return report;
}

EvalReport evaluate(const ModelSpec& model, const Dataset& data) {
    return macro_f1(forward(model, data.features), data.labels, data.num_classes);
}

EvalReport evaluate_codebook(const ModelSpec& model, const ParameterVector& theta,
                             const Codebook& codebook, const Dataset& data) {
    const ParameterVector reconstructed = reconstruct_values(theta, codebook);
    return evaluate(unflatten(reconstructed, model), data);
}

ModelSpec init_model(const std::vector<std::uint32_t>& arch, std::uint64_t seed) {
    if (arch.size() < 2) throw std::invalid_argument("arch needs at least input and output dims");
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
    ModelSpec model;
    for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
        DenseLayer layer;
        layer.in_dim = arch[i];
        layer.out_dim = arch[i + 1];
        layer.activation =
            (i + 2 == arch.size()) ? Activation::softmax_output : Activation::relu;
        const double scale = std::sqrt(2.0 / static_cast<double>(arch[i] + arch[i + 1]));
        std::normal_distribution<float> dist(0.0f, static_cast<float>(scale));
        layer.weights.resize(layer.in_dim, layer.out_dim);
        for (Eigen::Index j = 0; j < layer.weights.size(); ++j)
            layer.weights.data()[j] = dist(rng);
        layer.bias = VectorF::Zero(layer.out_dim);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

MatrixF softmax_rows(const MatrixF& logits) {
    MatrixF probs = logits;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const float m = probs.row(r).maxCoeff();
        probs.row(r) = (probs.row(r).array() - m).exp();
        probs.row(r) /= probs.row(r).sum();
    }
    return probs;
}

} // namespace

ModelSpec train_baseline(const TrainConfig& config, const Dataset& train) {
    if (train.split != Split::train)
        throw std::invalid_argument("train_baseline expects the train split");
    validate(train);
    if (config.arch.empty() || config.arch.front() != train.features.cols())
        throw std::invalid_argument("arch input dim != dataset feature width");
    if (config.arch.back() != train.num_classes)
        throw std::invalid_argument("arch output dim != num_classes");
    if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");

    ModelSpec model = init_model(config.arch, config.seed);
    if (config.epochs == 0) return model;

    const std::size_t n = train.rows();
    const std::size_t num_layers = model.layers.size();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(config.seed ^ 0x9e3779b97f4a7c15ull));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    const float lr = static_cast<float>(config.learning_rate);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the raw engine keeps the permutation sequence
        // independent of library distribution internals.
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(order[i], order[j]);
        }

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t bsz = std::min<std::size_t>(config.batch_size, n - start);
            MatrixF x(bsz, train.features.cols());
            std::vector<std::uint32_t> y(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                x.row(static_cast<Eigen::Index>(b)) =
                    train.features.row(static_cast<Eigen::Index>(order[start + b]));
                y[b] = train.labels[order[start + b]];
            }

            // Forward, keeping pre/post-activation values for backprop.
            std::vector<MatrixF> inputs(num_layers);
            MatrixF a = x;
            std::vector<MatrixF> pre(num_layers);
            for (std::size_t l = 0; l < num_layers; ++l) {
                inputs[l] = a;
                MatrixF z = a * model.layers[l].weights;
                z.rowwise() += model.layers[l].bias.transpose();
                pre[l] = z;
                a = (model.layers[l].activation == Activation::relu) ? MatrixF(z.cwiseMax(0.0f))
                                                                     : std::move(z);
            }

            // Softmax cross-entropy gradient at the output.
            MatrixF grad = softmax_rows(a);
            for (std::size_t b = 0; b < bsz; ++b)
                grad(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(y[b])) -= 1.0f;
            grad /= static_cast<float>(bsz);

            for (std::size_t l = num_layers; l-- > 0;) {
                if (model.layers[l].activation == Activation::relu)
                    grad = grad.cwiseProduct((pre[l].array() > 0.0f).cast<float>().matrix());
                const MatrixF grad_w = inputs[l].transpose() * grad;
                const VectorF grad_b = grad.colwise().sum().transpose();
                if (l > 0) grad = grad * model.layers[l].weights.transpose();
                model.layers[l].weights -= lr * grad_w;
                model.layers[l].bias -= lr * grad_b;
            }
        }
    }
    validate(model);
    return model;
}

BlobSplits make_blobs(const BlobConfig& config) {
    if (config.num_classes == 0 || config.samples_per_class == 0)
        throw std::invalid_argument("blob counts must be positive");
    if (config.spread < 0.0) throw std::invalid_argument("spread must be non-negative");

    std::mt19937 rng(static_cast<std::mt19937::result_type>(config.seed));
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
    std::normal_distribution<double> noise(0.0, config.spread);

    // Class centers on a circle; a seeded rotation varies them across seeds
    // while keeping the classes well separated relative to typical spreads.
    constexpr double kRadius = 3.0;
    const double offset = angle_dist(rng);
    std::vector<std::pair<double, double>> centers(config.num_classes);
    for (std::uint32_t c = 0; c < config.num_classes; ++c) {
        const double angle = offset + 2.0 * M_PI * c / config.num_classes;
        centers[c] = {kRadius * std::cos(angle), kRadius * std::sin(angle)};
    }

    const std::uint32_t per_class = config.samples_per_class;
    const std::uint32_t val_per_class =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(0.1 * per_class)));
    if (val_per_class >= per_class)
        throw std::invalid_argument("samples_per_class too small to split validation from test");

    auto make_split = [&](std::uint32_t rows_per_class, Split tag) {
        Dataset data;
        data.num_classes = config.num_classes;
        data.split = tag;
        data.features.resize(static_cast<Eigen::Index>(rows_per_class) * config.num_classes, 2);
        data.labels.resize(static_cast<std::size_t>(rows_per_class) * config.num_classes);
        return data;
    };

    BlobSplits splits;
    splits.train = make_split(per_class, Split::train);
    splits.validation = make_split(val_per_class, Split::validation);
    splits.test = make_split(per_class - val_per_class, Split::test);

    auto fill_row = [&](Dataset& data, std::size_t row, std::uint32_t label) {
        data.features(static_cast<Eigen::Index>(row), 0) =
            static_cast<float>(centers[label].first + noise(rng));
        data.features(static_cast<Eigen::Index>(row), 1) =
            static_cast<float>(centers[label].second + noise(rng));
        data.labels[row] = label;
    };

    std::size_t train_row = 0, val_row = 0, test_row = 0;
    for (std::uint32_t c = 0; c < config.num_classes; ++c) {
        for (std::uint32_t i = 0; i < per_class; ++i) fill_row(splits.train, train_row++, c);
        // Held-out pool: first 10% to validation, the rest to test, so the
        // two stay disjoint by construction.
        for (std::uint32_t i = 0; i < val_per_class; ++i) fill_row(splits.validation, val_row++, c);
        for (std::uint32_t i = 0; i < per_class - val_per_class; ++i)
            fill_row(splits.test, test_row++, c);
    }
    return splits;
}

namespace {

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const ClassScore& score : report.per_class) {
        per_class.push_back({{"precision", score.precision},
                             {"recall", score.recall},
                             {"f1", score.f1},
                             {"support", score.support},
                             {"absent", score.absent}});
    }
    return {{"f1", report.f1},
            {"top1", report.top1},
            {"per_class", std::move(per_class)},
            {"samples", report.samples}};
}

} // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2); }

void save_report_json(const EvalReport& report, const std::filesystem::path& path) {
    detail::write_text_file(path, report_to_json(report) + "\n");
}

} // namespace wsc
