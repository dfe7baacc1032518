#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "skelscene/descriptor.hpp"
#include "skelscene/errors.hpp"
#include "skelscene/util.hpp"

namespace skelscene {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// ------------------------------------------------------------------ config

enum class OptimizerKind { sgd, adam };

inline std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind optimizer_from_name(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

struct ClassifierConfig {
    std::size_t rows = 240;  // input shape
    std::size_t cols = 126;
    std::vector<std::size_t> widths{2, 3, 4, 5};
    std::size_t filters = 1024;  // total over all widths
    std::size_t dense = 256;
    std::size_t classes = 15;
    double learning_rate = 1e-4;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double keep_prob = 0.5;
    std::uint64_t seed = 1;

    std::size_t filters_per_width() const { return filters / widths.size(); }

    void validate() const {
        if (widths.empty()) throw ConfigError("at least one filter width is required");
        for (auto w : widths) {
            if (w < 1 || w > rows) throw ConfigError("filter width " + std::to_string(w) + " does not fit the input rows");
        }
        if (filters == 0 || filters % widths.size() != 0) {
            throw ConfigError("filter count " + std::to_string(filters) + " is not divisible by the " +
                              std::to_string(widths.size()) + " filter widths");
        }
        if (classes < 2) throw ConfigError("at least two classes are required");
        if (dense < 1 || cols < 1) throw ConfigError("layer sizes must be positive");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("dropout keep probability must be in (0, 1]");
    }
};

inline nlohmann::json to_json(const ClassifierConfig& c) {
    return {
        {"rows", c.rows},
        {"cols", c.cols},
        {"widths", c.widths},
        {"filters", c.filters},
        {"dense", c.dense},
        {"classes", c.classes},
        {"learning_rate", c.learning_rate},
        {"optimizer", optimizer_name(c.optimizer)},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"keep_prob", c.keep_prob},
        {"seed", c.seed},
    };
}

inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j) {
    ClassifierConfig c;
    c.rows = j.at("rows").get<std::size_t>();
    c.cols = j.at("cols").get<std::size_t>();
    c.widths = j.at("widths").get<std::vector<std::size_t>>();
    c.filters = j.at("filters").get<std::size_t>();
    c.dense = j.at("dense").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.keep_prob = j.at("keep_prob").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

// ------------------------------------------------------------------ inputs

// A feature matrix stored by its nonzero rows. Padding rows of a scene
// matrix are all zero, so the convolution only has to touch occupied rows.
class ClassifierInput {
public:
    ClassifierInput(std::span<const double> data, std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
        if (data.size() != rows * cols) throw ShapeMismatch("input data does not match its declared shape");
        row_slot_.assign(rows, -1);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto row = data.subspan(r * cols, cols);
            if (std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; })) {
                row_slot_[r] = static_cast<int>(nonzero_.size());
                nonzero_.push_back(r);
            }
        }
        values_.resize(static_cast<Eigen::Index>(nonzero_.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < nonzero_.size(); ++i) {
            for (std::size_t c = 0; c < cols; ++c) {
                values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data[nonzero_[i] * cols + c];
            }
        }
    }

    explicit ClassifierInput(const SceneFeatureMatrix& m) : ClassifierInput(m.data(), m.rows(), m.cols()) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const std::vector<std::size_t>& nonzero_rows() const noexcept { return nonzero_; }
    const RowMatrix& values() const noexcept { return values_; }
    // Index into values() for row r, or -1 for an all-zero row.
    int slot(std::size_t r) const { return row_slot_[r]; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::size_t> nonzero_;
    std::vector<int> row_slot_;
    RowMatrix values_;
};

struct LabeledInput {
    ClassifierInput input;
    std::size_t label;
};

// ------------------------------------------------------------------ model

struct TensorSpec {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
    int layer;  // 0 convolution, 1 dense, 2 output

    std::size_t size() const noexcept { return rows * cols; }
};

inline std::vector<TensorSpec> parameter_layout(const ClassifierConfig& c) {
    std::vector<TensorSpec> out;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols, int layer) {
        out.push_back({std::move(name), offset, rows, cols, layer});
        offset += rows * cols;
    };
    const std::size_t fw = c.filters_per_width();
    for (auto w : c.widths) {
        // Kernel rows are (offset k, input column) pairs: row k * cols + col.
        add("conv" + std::to_string(w) + ".kernel", w * c.cols, fw, 0);
        add("conv" + std::to_string(w) + ".bias", 1, fw, 0);
    }
    add("dense.weight", c.filters, c.dense, 1);
    add("dense.bias", 1, c.dense, 1);
    add("output.weight", c.dense, c.classes, 2);
    add("output.bias", 1, c.classes, 2);
    return out;
}

// Convolution (several row-window widths, full input width) -> rectifier ->
// max over rows -> dropout -> dense + rectifier -> softmax.
class ClassifierModel {
public:
    explicit ClassifierModel(ClassifierConfig config) : config_(std::move(config)) {
        config_.validate();
        layout_ = parameter_layout(config_);
        params_.assign(layout_.back().offset + layout_.back().size(), 0.0);
    }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    static ClassifierModel initialized(const ClassifierConfig& config) {
        ClassifierModel m(config);
        Rng rng(mix_seed(config.seed, 1));
        for (const auto& t : m.layout_) {
            if (t.rows == 1) continue;  // bias
            const double bound = 1.0 / std::sqrt(static_cast<double>(t.rows));
            for (std::size_t i = 0; i < t.size(); ++i) m.params_[t.offset + i] = uniform(rng, -bound, bound);
        }
        return m;
    }

    const ClassifierConfig& config() const noexcept { return config_; }
    const std::vector<TensorSpec>& layout() const noexcept { return layout_; }
    std::vector<double>& parameters() noexcept { return params_; }
    const std::vector<double>& parameters() const noexcept { return params_; }

    ConstMatrixMap tensor(std::size_t i) const {
        const auto& t = layout_[i];
        return {params_.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
    }
    MatrixMap tensor(std::size_t i) {
        const auto& t = layout_[i];
        return {params_.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
    }

    std::size_t conv_kernel_index(std::size_t bank) const { return 2 * bank; }
    std::size_t conv_bias_index(std::size_t bank) const { return 2 * bank + 1; }
    std::size_t dense_weight_index() const { return 2 * config_.widths.size(); }
    std::size_t dense_bias_index() const { return dense_weight_index() + 1; }
    std::size_t output_weight_index() const { return dense_weight_index() + 2; }
    std::size_t output_bias_index() const { return dense_weight_index() + 3; }

    bool all_finite() const {
        return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    ClassifierConfig config_;
    std::vector<TensorSpec> layout_;
    std::vector<double> params_;
};

// Dropout masks are drawn from this stream; nullptr means inference.
struct DropoutSource {
    Rng* rng = nullptr;
    double keep_prob = 1.0;
};

// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardTrace {
    std::vector<std::vector<std::size_t>> argmax;  // per bank, per filter: winning window start
    Eigen::VectorXd pooled;                        // max over windows of the pre-activation
    Eigen::VectorXd features;                      // rectified pooled features after dropout
    Eigen::VectorXd mask;                          // dropout scale per feature
    Eigen::VectorXd hidden_pre;
    Eigen::VectorXd hidden;
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
};

namespace detail {

inline void check_shape(const ClassifierModel& m, const ClassifierInput& x) {
    if (x.rows() != m.config().rows || x.cols() != m.config().cols) {
        throw ShapeMismatch("input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                            ", model expects " + std::to_string(m.config().rows) + "x" +
                            std::to_string(m.config().cols));
    }
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double mx = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - mx).exp();
    return e / e.sum();
}

inline double log_softmax_at(const Eigen::VectorXd& logits, std::size_t label) {
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits[static_cast<Eigen::Index>(label)] - lse;
}

}  // namespace detail

inline ForwardTrace forward_trace(const ClassifierModel& model, const ClassifierInput& x, DropoutSource dropout = {}) {
    detail::check_shape(model, x);
    const auto& cfg = model.config();
    const std::size_t fw = cfg.filters_per_width();
    const auto cols = static_cast<Eigen::Index>(cfg.cols);
    ForwardTrace tr;
    tr.argmax.resize(cfg.widths.size());
    tr.pooled.resize(static_cast<Eigen::Index>(cfg.filters));

    RowMatrix conv;
    RowMatrix projected;
    for (std::size_t b = 0; b < cfg.widths.size(); ++b) {
        const std::size_t w = cfg.widths[b];
        const std::size_t windows = cfg.rows - w + 1;
        const auto kernel = model.tensor(model.conv_kernel_index(b));
        const auto bias = model.tensor(model.conv_bias_index(b));
        conv = bias.replicate(static_cast<Eigen::Index>(windows), 1);
        for (std::size_t k = 0; k < w; ++k) {
            if (x.nonzero_rows().empty()) break;
            projected.noalias() = x.values() * kernel.middleRows(static_cast<Eigen::Index>(k) * cols, cols);
            for (std::size_t i = 0; i < x.nonzero_rows().size(); ++i) {
                const std::size_t r = x.nonzero_rows()[i];
                if (r < k || r - k >= windows) continue;
                conv.row(static_cast<Eigen::Index>(r - k)) += projected.row(static_cast<Eigen::Index>(i));
            }
        }
        auto& am = tr.argmax[b];
        am.assign(fw, 0);
        for (std::size_t f = 0; f < fw; ++f) {
            const auto fi = static_cast<Eigen::Index>(f);
            double best = conv(0, fi);
            for (std::size_t t = 1; t < windows; ++t) {
                const double v = conv(static_cast<Eigen::Index>(t), fi);
                if (v > best) {
                    best = v;
                    am[f] = t;
                }
            }
            tr.pooled[static_cast<Eigen::Index>(b * fw + f)] = best;
        }
    }

    tr.mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.filters));
    if (dropout.rng != nullptr && dropout.keep_prob < 1.0) {
        for (Eigen::Index i = 0; i < tr.mask.size(); ++i) {
            tr.mask[i] = uniform01(*dropout.rng) < dropout.keep_prob ? 1.0 / dropout.keep_prob : 0.0;
        }
    }
    tr.features = tr.pooled.cwiseMax(0.0).cwiseProduct(tr.mask);

    const auto w1 = model.tensor(model.dense_weight_index());
    const auto b1 = model.tensor(model.dense_bias_index());
    tr.hidden_pre = w1.transpose() * tr.features + b1.transpose();
    tr.hidden = tr.hidden_pre.cwiseMax(0.0);

    const auto w2 = model.tensor(model.output_weight_index());
    const auto b2 = model.tensor(model.output_bias_index());
    tr.logits = w2.transpose() * tr.hidden + b2.transpose();
    tr.probs = detail::softmax(tr.logits);
    return tr;
}

// Class probabilities. Pass a dropout source only when training.
inline Eigen::VectorXd forward(const ClassifierModel& model, const ClassifierInput& x, DropoutSource dropout = {}) {
    return forward_trace(model, x, dropout).probs;
}

inline std::size_t predict(const ClassifierModel& model, const ClassifierInput& x) {
    Eigen::Index best = 0;
    forward(model, x).maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

namespace detail {

inline void check_label(const ClassifierModel& m, std::size_t label) {
    if (label >= m.config().classes) {
        throw LabelOutOfRange("label " + std::to_string(label) + " outside " + std::to_string(m.config().classes) +
                              " classes");
    }
}

// Accumulates scale * d(-log p[label]) / d(params) into grad.
inline void backward(const ClassifierModel& model, const ClassifierInput& x, const ForwardTrace& tr, std::size_t label,
                     double scale, std::vector<double>& grad) {
    const auto& cfg = model.config();
    const auto& layout = model.layout();
    auto gmap = [&](std::size_t i) {
        const auto& t = layout[i];
        return MatrixMap(grad.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    };

    Eigen::VectorXd dlogits = tr.probs;
    dlogits[static_cast<Eigen::Index>(label)] -= 1.0;
    dlogits *= scale;

    gmap(model.output_weight_index()).noalias() += tr.hidden * dlogits.transpose();
    gmap(model.output_bias_index()) += dlogits.transpose();

    const auto w2 = model.tensor(model.output_weight_index());
    Eigen::VectorXd dhidden = w2 * dlogits;
    for (Eigen::Index i = 0; i < dhidden.size(); ++i) {
        if (tr.hidden_pre[i] <= 0.0) dhidden[i] = 0.0;
    }
    gmap(model.dense_weight_index()).noalias() += tr.features * dhidden.transpose();
    gmap(model.dense_bias_index()) += dhidden.transpose();

    const auto w1 = model.tensor(model.dense_weight_index());
    Eigen::VectorXd dfeatures = w1 * dhidden;
    const std::size_t fw = cfg.filters_per_width();
    const auto cols = static_cast<Eigen::Index>(cfg.cols);
    for (std::size_t b = 0; b < cfg.widths.size(); ++b) {
        auto dkernel = gmap(model.conv_kernel_index(b));
        auto dbias = gmap(model.conv_bias_index(b));
        for (std::size_t f = 0; f < fw; ++f) {
            const auto fi = static_cast<Eigen::Index>(b * fw + f);
            if (tr.pooled[fi] <= 0.0 || tr.mask[fi] == 0.0) continue;
            const double g = dfeatures[fi] * tr.mask[fi];
            dbias(0, static_cast<Eigen::Index>(f)) += g;
            const std::size_t t = tr.argmax[b][f];
            for (std::size_t k = 0; k < cfg.widths[b]; ++k) {
                const int slot = x.slot(t + k);
                if (slot < 0) continue;
                dkernel.block(static_cast<Eigen::Index>(k) * cols, static_cast<Eigen::Index>(f), cols, 1) +=
                    g * x.values().row(slot).transpose();
            }
        }
    }
}

}  // namespace detail

// Mean negative log-likelihood of the true labels, inference mode.
inline double loss(const ClassifierModel& model, std::span<const LabeledInput> batch) {
    if (batch.empty()) throw std::invalid_argument("loss of an empty batch");
    double total = 0.0;
    for (const auto& s : batch) {
        detail::check_label(model, s.label);
        const auto tr = forward_trace(model, s.input);
        total -= detail::log_softmax_at(tr.logits, s.label);
    }
    return total / static_cast<double>(batch.size());
}

struct GradientResult {
    std::vector<double> gradient;  // same layout as the model parameters
    double loss = 0.0;
    std::size_t correct = 0;
};

// Gradient of the mean batch loss. With a dropout source the masks are drawn
// in batch order, which keeps training reproducible.
inline GradientResult gradients(const ClassifierModel& model, std::span<const LabeledInput> batch,
                                DropoutSource dropout = {}) {
    if (batch.empty()) throw std::invalid_argument("gradient of an empty batch");
    GradientResult out;
    out.gradient.assign(model.parameters().size(), 0.0);
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        detail::check_label(model, s.label);
        const auto tr = forward_trace(model, s.input, dropout);
        out.loss -= detail::log_softmax_at(tr.logits, s.label) * scale;
        Eigen::Index best = 0;
        tr.probs.maxCoeff(&best);
        out.correct += static_cast<std::size_t>(best) == s.label ? 1 : 0;
        detail::backward(model, s.input, tr, s.label, scale, out.gradient);
    }
    return out;
}

// ------------------------------------------------------------------ optimizers

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, std::size_t size)
        : kind_(kind), lr_(learning_rate) {
        if (kind_ == OptimizerKind::adam) {
            m_.assign(size, 0.0);
            v_.assign(size, 0.0);
        }
    }

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (kind_ == OptimizerKind::sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
            return;
        }
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

private:
    OptimizerKind kind_;
    double lr_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

// ------------------------------------------------------------------ evaluation

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

    void add(std::size_t truth, std::size_t predicted) {
        if (truth >= classes_ || predicted >= classes_) throw LabelOutOfRange("confusion matrix label out of range");
        ++counts_[truth * classes_ + predicted];
    }

    std::size_t classes() const noexcept { return classes_; }
    std::size_t operator()(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }

    std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }
    std::size_t trace() const {
        std::size_t t = 0;
        for (std::size_t c = 0; c < classes_; ++c) t += (*this)(c, c);
        return t;
    }
    std::size_t row_sum(std::size_t truth) const {
        std::size_t s = 0;
        for (std::size_t p = 0; p < classes_; ++p) s += (*this)(truth, p);
        return s;
    }
    std::size_t column_sum(std::size_t predicted) const {
        std::size_t s = 0;
        for (std::size_t t = 0; t < classes_; ++t) s += (*this)(t, predicted);
        return s;
    }

    double accuracy() const {
        const auto n = total();
        return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
    }
    // 0 when the class was never predicted / never present.
    double precision(std::size_t c) const {
        const auto n = column_sum(c);
        return n == 0 ? 0.0 : static_cast<double>((*this)(c, c)) / static_cast<double>(n);
    }
    double recall(std::size_t c) const {
        const auto n = row_sum(c);
        return n == 0 ? 0.0 : static_cast<double>((*this)(c, c)) / static_cast<double>(n);
    }

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
};

inline ConfusionMatrix evaluate(const ClassifierModel& model, std::span<const LabeledInput> samples) {
    if (samples.empty()) throw std::invalid_argument("evaluation set is empty");
    ConfusionMatrix cm(model.config().classes);
    for (const auto& s : samples) {
        detail::check_label(model, s.label);
        cm.add(s.label, predict(model, s.input));
    }
    return cm;
}

// ------------------------------------------------------------------ training

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    ClassifierModel model;  // best validation accuracy (earliest on ties)
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

inline TrainResult train(const ClassifierConfig& config, std::span<const LabeledInput> train_set,
                         std::span<const LabeledInput> val_set, const EpochCallback& on_epoch = {}) {
    config.validate();
    if (train_set.empty()) throw EmptyClass("training set is empty");
    std::vector<std::size_t> per_class(config.classes, 0);
    for (const auto& s : train_set) {
        if (s.label >= config.classes) throw LabelOutOfRange("training label out of range");
        ++per_class[s.label];
    }
    for (std::size_t c = 0; c < config.classes; ++c) {
        if (per_class[c] == 0) throw EmptyClass("class " + std::to_string(c) + " has no training samples");
    }

    ClassifierModel model = ClassifierModel::initialized(config);
    Optimizer opt(config.optimizer, config.learning_rate, model.parameters().size());
    Rng shuffle_rng(mix_seed(config.seed, 2));
    Rng dropout_rng(mix_seed(config.seed, 3));
    const DropoutSource dropout{&dropout_rng, config.keep_prob};

    TrainResult result{model, {}, 0};
    double best_val = -1.0;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LabeledInput> batch;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
            const auto g = gradients(model, batch, dropout);
            // Past this mean loss some true-class probability has underflowed to zero, so -log p is
            // infinite even though the log-softmax form stays representable.
            static const double ceiling = -std::log(std::numeric_limits<double>::min());
            if (!std::isfinite(g.loss) || g.loss > ceiling) {
                throw DivergedLoss("training loss became non-finite in epoch " + std::to_string(epoch));
            }
            opt.step(model.parameters(), g.gradient);
            if (!model.all_finite()) {
                throw DivergedLoss("parameters became non-finite in epoch " + std::to_string(epoch));
            }
            loss_sum += g.loss * static_cast<double>(batch.size());
            correct += g.correct;
        }
        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(train_set.size());
        st.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
        if (!val_set.empty()) {
            st.val_loss = loss(model, val_set);
            st.val_acc = evaluate(model, val_set).accuracy();
        } else {
            st.val_loss = std::numeric_limits<double>::quiet_NaN();
            st.val_acc = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(st.train_loss)) throw DivergedLoss("training loss became non-finite");
        const double score = val_set.empty() ? st.train_acc : st.val_acc;
        if (score > best_val) {
            best_val = score;
            result.model = model;
            result.best_epoch = epoch;
        }
        result.history.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    if (config.epochs == 0) result.model = model;
    return result;
}

inline std::string history_csv(std::span<const EpochStats> history) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& h : history) {
        out << h.epoch << ',' << h.train_loss << ',' << h.train_acc << ',' << h.val_loss << ',' << h.val_acc << '\n';
    }
    return out.str();
}

// ------------------------------------------------------------------ checkpoints
//
// "SKM1", version u32, JSON length u32, canonical JSON (classifier config plus
// metadata), then every parameter tensor in layout order as little-endian f64.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string encode_checkpoint(const ClassifierModel& model, const nlohmann::json& metadata = nlohmann::json::object()) {
    nlohmann::json header = {{"classifier", to_json(model.config())}, {"metadata", metadata}};
    const std::string blob = header.dump();
    std::string out = "SKM1";
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out += blob;
    out.reserve(out.size() + 8 * model.parameters().size());
    for (double v : model.parameters()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

struct Checkpoint {
    ClassifierModel model;
    nlohmann::json metadata;
};

inline Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != "SKM1") throw Error("not a classifier checkpoint");
    const auto version = detail::get_u32(bytes, 4);
    if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
    const auto len = detail::get_u32(bytes, 8);
    if (bytes.size() < 12 + static_cast<std::size_t>(len)) throw Error("truncated checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(12, len));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(std::string("bad checkpoint header: ") + ex.what());
    }
    ClassifierModel model(classifier_config_from_json(header.at("classifier")));
    auto& p = model.parameters();
    const std::size_t at = 12 + len;
    if (bytes.size() != at + 8 * p.size()) throw Error("checkpoint payload has the wrong size");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::bit_cast<double>(detail::get_u64(bytes, at + 8 * i));
    return {std::move(model), header.value("metadata", nlohmann::json::object())};
}

}  // namespace skelscene
