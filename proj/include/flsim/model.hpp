#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flsim/data.hpp"
#include "flsim/vecmath.hpp"

namespace flsim {

enum class ArchKind { softmax_regression, mlp };

// Dense stack: feature_dim -> hidden... -> num_classes. Hidden layers use
// tanh; the output layer feeds a softmax. softmax_regression is the stack
// with no hidden layers.
struct ModelArch {
    ArchKind kind = ArchKind::softmax_regression;
    std::vector<int> hidden;
    int feature_dim = 0;
    int num_classes = 0;

    struct Layer {
        int in = 0;
        int out = 0;
        std::size_t w_offset = 0; // row-major [out][in]
        std::size_t b_offset = 0;
    };

    std::vector<Layer> layers() const;
    int param_count() const;
};

struct Model {
    ModelArch arch;
    ParamVector params;
};

struct LocalTrainParams {
    int batch_size = 32;
    double lr = 0.1;
    int epochs = 1;
    std::uint64_t seed = 0;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Model init_model(const ModelArch& arch, std::uint64_t seed);

// Mean softmax cross-entropy over the batch and its exact gradient.
std::pair<double, ParamVector> loss_and_grad(const Model& m, const std::vector<Example>& batch);

// The per-epoch mini-batch visit order used by model_update; exposed so
// single-step behavior can be reproduced exactly.
std::vector<int> epoch_shuffle(int n, std::uint64_t seed, int epoch);

// Runs `epochs` of seeded mini-batch SGD from the global model and returns
// final_params - initial_params.
ParamVector model_update(const Model& global, const Dataset& shard, const LocalTrainParams& p);

// Logits for one feature vector.
std::vector<double> forward_logits(const Model& m, const std::vector<double>& features);

// Argmax class, ties broken by lowest class index.
int predict_class(const Model& m, const std::vector<double>& features);

// Fraction of test examples classified correctly.
double evaluate_accuracy(const Model& m, const Dataset& test);

// Fraction of triggered test examples (true label != target) classified as
// the trigger's target label.
double backdoor_success_rate(const Model& m, const Dataset& clean_test, const TriggerSpec& trig);

} // namespace flsim
