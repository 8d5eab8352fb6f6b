#include "flsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::vector<ModelArch::Layer> ModelArch::layers() const {
    std::vector<int> widths;
    widths.push_back(feature_dim);
    if (kind == ArchKind::mlp) {
        for (int h : hidden) {
            widths.push_back(h);
        }
    }
    widths.push_back(num_classes);

    std::vector<Layer> out;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.in = widths[l];
        layer.out = widths[l + 1];
        layer.w_offset = offset;
        layer.b_offset = offset + std::size_t(layer.in) * layer.out;
        offset = layer.b_offset + layer.out;
        out.push_back(layer);
    }
    return out;
}

int ModelArch::param_count() const {
    int d = 0;
    for (const Layer& l : layers()) {
        d += l.in * l.out + l.out;
    }
    return d;
}

Model init_model(const ModelArch& arch, std::uint64_t seed) {
    Model m;
    m.arch = arch;
    m.params.assign(arch.param_count(), 0.0);
    auto rng = make_rng(seed);
    for (const auto& layer : arch.layers()) {
        const double s = 1.0 / std::sqrt(static_cast<double>(layer.in));
        std::uniform_real_distribution<double> uni(-s, s);
        for (int k = 0; k < layer.in * layer.out; ++k) {
            m.params[layer.w_offset + k] = uni(rng);
        }
        // biases stay zero
    }
    return m;
}

namespace {

// Forward + backward for one example; adds the gradient contribution into
// grad and returns the example's cross-entropy loss.
double example_loss_grad(const Model& m, const std::vector<ModelArch::Layer>& layers,
                         const Example& ex, ParamVector& grad) {
    const ParamVector& p = m.params;
    const std::size_t n_layers = layers.size();

    // activations[l] is the input to layer l; activations[n_layers] = logits.
    std::vector<std::vector<double>> activations(n_layers + 1);
    activations[0] = ex.features;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = layers[l];
        std::vector<double> z(layer.out);
        const std::vector<double>& a = activations[l];
        for (int o = 0; o < layer.out; ++o) {
            double s = p[layer.b_offset + o];
            const std::size_t row = layer.w_offset + std::size_t(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                s += p[row + i] * a[i];
            }
            z[o] = s;
        }
        if (l + 1 < n_layers) {
            for (double& v : z) {
                v = std::tanh(v);
            }
        }
        activations[l + 1] = std::move(z);
    }

    // Softmax cross-entropy via log-sum-exp.
    const std::vector<double>& logits = activations[n_layers];
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) {
        sum += std::exp(z - zmax);
    }
    const double lse = zmax + std::log(sum);
    const double loss = lse - logits[ex.label];

    // delta = softmax(logits) - onehot(label)
    std::vector<double> delta(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        delta[c] = std::exp(logits[c] - lse);
    }
    delta[ex.label] -= 1.0;

    for (std::size_t l = n_layers; l-- > 0;) {
        const auto& layer = layers[l];
        const std::vector<double>& a = activations[l];
        for (int o = 0; o < layer.out; ++o) {
            const std::size_t row = layer.w_offset + std::size_t(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                grad[row + i] += delta[o] * a[i];
            }
            grad[layer.b_offset + o] += delta[o];
        }
        if (l > 0) {
            std::vector<double> prev(layer.in, 0.0);
            for (int i = 0; i < layer.in; ++i) {
                double s = 0.0;
                for (int o = 0; o < layer.out; ++o) {
                    s += p[layer.w_offset + std::size_t(o) * layer.in + i] * delta[o];
                }
                prev[i] = s * (1.0 - a[i] * a[i]); // tanh'
            }
            delta = std::move(prev);
        }
    }
    return loss;
}

} // namespace

std::pair<double, ParamVector> loss_and_grad(const Model& m, const std::vector<Example>& batch) {
    if (batch.empty()) {
        throw precondition_error("loss_and_grad: empty batch");
    }
    const auto layers = m.arch.layers();
    ParamVector grad(m.params.size(), 0.0);
    double loss = 0.0;
    for (const Example& ex : batch) {
        loss += example_loss_grad(m, layers, ex, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for (double& g : grad) {
        g *= inv;
    }
    return {loss, grad};
}

std::vector<int> epoch_shuffle(int n, std::uint64_t seed, int epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

ParamVector model_update(const Model& global, const Dataset& shard, const LocalTrainParams& p) {
    if (shard.empty()) {
        throw precondition_error("model_update: empty shard");
    }
    Model m = global;
    ParamVector delta(global.params.size(), 0.0);
    const int n = static_cast<int>(shard.size());
    std::vector<Example> batch;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        const std::vector<int> order = epoch_shuffle(n, p.seed, epoch);
        for (int start = 0; start < n; start += p.batch_size) {
            const int stop = std::min(start + p.batch_size, n);
            batch.clear();
            for (int k = start; k < stop; ++k) {
                batch.push_back(shard.examples[order[k]]);
            }
            const auto [loss, grad] = loss_and_grad(m, batch);
            (void)loss;
            for (std::size_t j = 0; j < delta.size(); ++j) {
                delta[j] -= p.lr * grad[j];
                m.params[j] = global.params[j] + delta[j];
            }
        }
    }
    return delta;
}

std::vector<double> forward_logits(const Model& m, const std::vector<double>& features) {
    const auto layers = m.arch.layers();
    std::vector<double> a = features;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<double> z(layer.out);
        for (int o = 0; o < layer.out; ++o) {
            double s = m.params[layer.b_offset + o];
            const std::size_t row = layer.w_offset + std::size_t(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                s += m.params[row + i] * a[i];
            }
            z[o] = s;
        }
        if (l + 1 < layers.size()) {
            for (double& v : z) {
                v = std::tanh(v);
            }
        }
        a = std::move(z);
    }
    return a;
}

int predict_class(const Model& m, const std::vector<double>& features) {
    const std::vector<double> logits = forward_logits(m, features);
    int best = 0;
    for (int c = 1; c < static_cast<int>(logits.size()); ++c) {
        if (logits[c] > logits[best]) {
            best = c;
        }
    }
    return best;
}

double evaluate_accuracy(const Model& m, const Dataset& test) {
    if (test.empty()) {
        throw precondition_error("evaluate_accuracy: empty test set");
    }
    std::size_t hits = 0;
    for (const Example& ex : test.examples) {
        if (predict_class(m, ex.features) == ex.label) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

double backdoor_success_rate(const Model& m, const Dataset& clean_test,
                             const TriggerSpec& trig) {
    if (clean_test.empty()) {
        throw precondition_error("backdoor_success_rate: empty test set");
    }
    std::size_t applicable = 0;
    std::size_t hits = 0;
    for (const Example& ex : clean_test.examples) {
        if (ex.label == trig.target_label) {
            continue;
        }
        ++applicable;
        if (predict_class(m, apply_trigger_pixels(ex.features, trig)) == trig.target_label) {
            ++hits;
        }
    }
    if (applicable == 0) {
        return 0.0;
    }
    return static_cast<double>(hits) / static_cast<double>(applicable);
}

} // namespace flsim
