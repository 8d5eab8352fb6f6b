#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flsim/data.hpp"
#include "flsim/errors.hpp"
#include "flsim/model.hpp"
#include "oracles.hpp"

using flsim::ArchKind;
using flsim::Dataset;
using flsim::Example;
using flsim::Model;
using flsim::ModelArch;

namespace {

ModelArch softmax_arch(int dim, int classes) {
    ModelArch a;
    a.kind = ArchKind::softmax_regression;
    a.feature_dim = dim;
    a.num_classes = classes;
    return a;
}

ModelArch mlp_arch(std::vector<int> hidden, int dim, int classes) {
    ModelArch a;
    a.kind = ArchKind::mlp;
    a.hidden = std::move(hidden);
    a.feature_dim = dim;
    a.num_classes = classes;
    return a;
}

std::vector<Example> random_batch(std::mt19937_64& rng, int dim, int classes, int count) {
    std::uniform_real_distribution<double> feature(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::vector<Example> batch(count);
    for (Example& ex : batch) {
        ex.features.resize(dim);
        for (double& f : ex.features) f = feature(rng);
        ex.label = label(rng);
    }
    return batch;
}

} // namespace

TEST_CASE("parameter counts") {
    CHECK(softmax_arch(784, 10).param_count() == 7850);
    CHECK(mlp_arch({32}, 20, 3).param_count() == 771);
    CHECK(mlp_arch({16, 8}, 10, 4).param_count() == 10 * 16 + 16 + 16 * 8 + 8 + 8 * 4 + 4);
}

TEST_CASE("init_model is deterministic, bounded, bias-free") {
    const auto arch = mlp_arch({8}, 12, 5);
    const Model a = flsim::init_model(arch, 9);
    const Model b = flsim::init_model(arch, 9);
    const Model c = flsim::init_model(arch, 10);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
    for (const auto& layer : arch.layers()) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (int k = 0; k < layer.in * layer.out; ++k) {
            CHECK(std::fabs(a.params[layer.w_offset + k]) <= bound);
        }
        for (int o = 0; o < layer.out; ++o) {
            CHECK(a.params[layer.b_offset + o] == 0.0);
        }
    }
}

TEST_CASE("uniform-output model has ln(L) loss") {
    Model m;
    m.arch = softmax_arch(6, 10);
    m.params.assign(m.arch.param_count(), 0.0);
    std::mt19937_64 rng(42);
    const auto batch = random_batch(rng, 6, 10, 13);
    const auto [loss, grad] = flsim::loss_and_grad(m, batch);
    (void)grad;
    CHECK(loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("duplicating the batch leaves loss and gradient unchanged") {
    std::mt19937_64 rng(7);
    const Model m = flsim::init_model(mlp_arch({6}, 5, 3), 3);
    const auto batch = random_batch(rng, 5, 3, 9);
    std::vector<Example> doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const auto [l1, g1] = flsim::loss_and_grad(m, batch);
    const auto [l2, g2] = flsim::loss_and_grad(m, doubled);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-13));
    CHECK(oracle::max_abs_diff(g1, g2) <= 1e-13);
}

TEST_CASE("gradients match central finite differences") {
    std::mt19937_64 rng(1234);
    int checked = 0;
    for (int it = 0; it < 24; ++it) {
        const bool use_mlp = it % 2 == 1;
        const int dim = 2 + it % 4;
        const int classes = 2 + it % 3;
        const auto arch =
            use_mlp ? mlp_arch({3 + it % 3}, dim, classes) : softmax_arch(dim, classes);
        const Model m = flsim::init_model(arch, 1000 + it);
        const auto batch = random_batch(rng, dim, classes, 1 + it % 5);

        const auto [loss, grad] = flsim::loss_and_grad(m, batch);
        (void)loss;
        const auto fd = oracle::finite_difference_grad(
            m, [&](const Model& probe) { return flsim::loss_and_grad(probe, batch).first; });
        CHECK(oracle::rel_norm_diff(grad, fd) <= 1e-4);
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("model_update with zero learning rate is a zero vector") {
    const Dataset shard = flsim::generate_synthetic(3, 6, 5, 77);
    const Model global = flsim::init_model(softmax_arch(6, 3), 2);
    flsim::LocalTrainParams p;
    p.batch_size = 4;
    p.lr = 0.0;
    p.epochs = 3;
    p.seed = 5;
    const auto update = flsim::model_update(global, shard, p);
    for (double u : update) CHECK(u == 0.0);
}

TEST_CASE("single full-batch epoch equals one explicit gradient step") {
    const Dataset shard = flsim::generate_synthetic(4, 5, 6, 31);
    const Model global = flsim::init_model(mlp_arch({4}, 5, 4), 8);
    flsim::LocalTrainParams p;
    p.batch_size = static_cast<int>(shard.size());
    p.lr = 0.2;
    p.epochs = 1;
    p.seed = 17;
    const auto update = flsim::model_update(global, shard, p);

    // Reproduce the shuffled batch order, then take the same single step.
    const auto order = flsim::epoch_shuffle(static_cast<int>(shard.size()), p.seed, 0);
    std::vector<Example> batch;
    for (int idx : order) batch.push_back(shard.examples[idx]);
    const auto [loss, grad] = flsim::loss_and_grad(global, batch);
    (void)loss;
    REQUIRE(update.size() == grad.size());
    for (std::size_t j = 0; j < grad.size(); ++j) {
        CHECK(update[j] == -p.lr * grad[j]);
    }
}

TEST_CASE("model_update is deterministic") {
    const Dataset shard = flsim::generate_synthetic(3, 4, 20, 55);
    const Model global = flsim::init_model(softmax_arch(4, 3), 6);
    flsim::LocalTrainParams p;
    p.batch_size = 7;
    p.lr = 0.1;
    p.epochs = 2;
    p.seed = 99;
    CHECK(flsim::model_update(global, shard, p) == flsim::model_update(global, shard, p));
}

TEST_CASE("evaluate_accuracy ties break to the lowest class") {
    Model m;
    m.arch = softmax_arch(3, 10);
    m.params.assign(m.arch.param_count(), 0.0); // all logits tie -> predicts class 0
    Dataset balanced;
    balanced.num_classes = 10;
    balanced.feature_dim = 3;
    for (int c = 0; c < 10; ++c) {
        for (int k = 0; k < 4; ++k) {
            balanced.examples.push_back({{0.1, 0.2, 0.3}, c});
        }
    }
    CHECK(flsim::evaluate_accuracy(m, balanced) == doctest::Approx(0.1));
}

TEST_CASE("evaluate_accuracy is permutation invariant") {
    const Dataset test = flsim::generate_synthetic(4, 6, 30, 3);
    const Model m = flsim::init_model(softmax_arch(6, 4), 5);
    Dataset shuffled = test;
    std::mt19937_64 rng(8);
    std::shuffle(shuffled.examples.begin(), shuffled.examples.end(), rng);
    CHECK(flsim::evaluate_accuracy(m, test) == flsim::evaluate_accuracy(m, shuffled));
}

TEST_CASE("a trained memorizer scores 1.0 on its own points") {
    Dataset points;
    points.num_classes = 2;
    points.feature_dim = 2;
    points.examples.push_back({{1.0, 0.0}, 0});
    points.examples.push_back({{0.0, 1.0}, 1});
    Model m = flsim::init_model(softmax_arch(2, 2), 4);
    for (int step = 0; step < 200; ++step) {
        const auto [loss, grad] = flsim::loss_and_grad(m, points.examples);
        (void)loss;
        for (std::size_t j = 0; j < m.params.size(); ++j) m.params[j] -= 1.0 * grad[j];
    }
    CHECK(flsim::evaluate_accuracy(m, points) == 1.0);
}

TEST_CASE("random init lands near the class prior on balanced data") {
    const Dataset test = flsim::generate_synthetic(10, 8, 40, 77);
    const Model m = flsim::init_model(softmax_arch(8, 10), 123);
    const double acc = flsim::evaluate_accuracy(m, test);
    CHECK(acc >= 0.0);
    CHECK(acc <= 0.5);
}

TEST_CASE("backdoor_success_rate") {
    flsim::TriggerSpec trig;
    trig.pixel_positions = {2};
    trig.pixel_value = 1.0;
    trig.target_label = 0;

    // Features: one-hot class indicator in positions 0..1, position 2 unused.
    Dataset test;
    test.num_classes = 2;
    test.feature_dim = 3;
    for (int k = 0; k < 5; ++k) {
        test.examples.push_back({{1.0, 0.0, 0.0}, 0});
        test.examples.push_back({{0.0, 1.0, 0.0}, 1});
    }

    Model ignores;
    ignores.arch = softmax_arch(3, 2);
    ignores.params.assign(ignores.arch.param_count(), 0.0);
    ignores.params[0 * 3 + 0] = 5.0; // class 0 reads feature 0
    ignores.params[1 * 3 + 1] = 5.0; // class 1 reads feature 1
    CHECK(flsim::evaluate_accuracy(ignores, test) == 1.0);
    CHECK(flsim::backdoor_success_rate(ignores, test, trig) == 0.0);

    Model hardwired;
    hardwired.arch = softmax_arch(3, 2);
    hardwired.params.assign(hardwired.arch.param_count(), 0.0);
    hardwired.params[2 * 3 + 0] = 100.0; // bias of class 0
    CHECK(flsim::backdoor_success_rate(hardwired, test, trig) == 1.0);

    const Model random_model = flsim::init_model(softmax_arch(3, 2), 5);
    const double rate = flsim::backdoor_success_rate(random_model, test, trig);
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
}

TEST_CASE("training decreases the full-dataset loss epoch over epoch") {
    const Dataset ds = flsim::generate_synthetic(3, 8, 60, 19);
    Model m = flsim::init_model(softmax_arch(8, 3), 11);
    flsim::LocalTrainParams p;
    p.batch_size = 16;
    p.lr = 0.05;
    p.epochs = 1;
    double prev_loss = flsim::loss_and_grad(m, ds.examples).first;
    for (int epoch = 0; epoch < 5; ++epoch) {
        p.seed = 100 + epoch;
        const auto update = flsim::model_update(m, ds, p);
        for (std::size_t j = 0; j < m.params.size(); ++j) m.params[j] += update[j];
        const double loss = flsim::loss_and_grad(m, ds.examples).first;
        CHECK(loss < prev_loss + 1e-9);
        prev_loss = loss;
    }
}
