#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flsim/aggregation.hpp"
#include "flsim/attacks.hpp"
#include "flsim/data.hpp"
#include "flsim/model.hpp"

namespace flsim {

struct DatasetSpec {
    enum class Kind { synthetic, mnist };
    Kind kind = Kind::synthetic;
    // synthetic
    int num_classes = 10;
    int feature_dim = 32;
    int per_class = 500;
    // mnist
    std::string images_path;
    std::string labels_path;
};

struct ArchSpec {
    ArchKind kind = ArchKind::softmax_regression;
    std::vector<int> hidden;
};

struct RootSpec {
    int size = 100;
    double bias_p = 0.1;
};

struct RuleSpec {
    std::string name = "fltg";
    RuleParams params;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ArchSpec arch;
    int n_clients = 100;
    int clients_per_round = 0; // 0 resolves to n_clients
    int rounds = 30;
    double global_lr = 1.0;
    int batch_size = 32;
    double local_lr = 0.0; // 0 resolves per arch (0.1 softmax, 0.05 mlp)
    int local_epochs = 1;
    double noniid_q = 0.1;
    RootSpec root;
    RuleSpec rule;
    AttackSpec attack;
    std::uint64_t master_seed = 1;

    int resolved_clients_per_round() const {
        return clients_per_round > 0 ? clients_per_round : n_clients;
    }
    double resolved_local_lr() const {
        if (local_lr > 0.0) return local_lr;
        return arch.kind == ArchKind::softmax_regression ? 0.1 : 0.05;
    }
};

// Throws config_error naming the offending key.
void validate_config(const ExperimentConfig& cfg);

struct RoundMetrics {
    int round = 0;
    double test_accuracy = 0.0;
    std::optional<double> backdoor_success;
    std::map<int, double> per_client_scores;
    std::set<int> filtered_ids;
    bool aggregate_skipped = false;
};

struct SimState {
    Model global;
    ParamVector prev_global_update;       // zero until the first successful round
    std::vector<Dataset> shards;          // honest shards, one per client
    std::vector<Dataset> poisoned_shards; // nonempty only for data-attacked malicious clients
    Dataset root;
    Dataset test;
    TriggerSpec trigger;
};

// Builds data (test split, root sample, non-IID partition, poisoned shards)
// and the initial global model. Deterministic per config.
SimState make_initial_state(const ExperimentConfig& cfg);

// One round of the federated loop: sample clients, local + server training,
// update-side attacks, aggregation, global step, metrics. On an
// empty-aggregate round the global model is left unchanged and
// aggregate_skipped is set.
RoundMetrics run_round(SimState& state, const ExperimentConfig& cfg, int t);

std::vector<RoundMetrics> run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { bias_p, noniid_q, malicious_fraction };

SweepAxis parse_sweep_axis(const std::string& name);
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, double value);

// Final-round metrics per axis value, all else (including seeds) fixed.
std::map<double, RoundMetrics> sweep(const ExperimentConfig& base, SweepAxis axis,
                                     const std::vector<double>& values);

} // namespace flsim
