#include "flsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

namespace {

constexpr double kTestFraction = 0.2;

bool data_side_attack(AttackKind kind) {
    return kind == AttackKind::label_flip || kind == AttackKind::scaling_backdoor;
}

// Root examples with their source indices, so the client pool can exclude them.
Dataset sample_root_with_indices(const Dataset& ds, int size, double bias_p,
                                 std::uint64_t seed, std::vector<int>& chosen) {
    // Mirrors sample_root_dataset but records which examples were taken.
    if (size > static_cast<int>(ds.size())) {
        throw precondition_error("sample_root_dataset: size exceeds dataset");
    }
    const int L = ds.num_classes;
    std::vector<std::vector<int>> by_class(L);
    for (int i = 0; i < static_cast<int>(ds.size()); ++i) {
        by_class[ds.examples[i].label].push_back(i);
    }
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset root;
    root.num_classes = ds.num_classes;
    root.feature_dim = ds.feature_dim;
    chosen.clear();
    for (int k = 0; k < size; ++k) {
        int cls = 0;
        if (!(unit(rng) < bias_p)) {
            std::uniform_int_distribution<int> other(1, L - 1);
            cls = other(rng);
        }
        auto& pool = by_class[cls];
        if (pool.empty()) {
            throw sampling_error("sample_root_dataset: class " + std::to_string(cls) +
                                 " exhausted after " + std::to_string(k) + " draws");
        }
        std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
        const int slot = pick(rng);
        root.examples.push_back(ds.examples[pool[slot]]);
        chosen.push_back(pool[slot]);
        pool[slot] = pool.back();
        pool.pop_back();
    }
    return root;
}

} // namespace

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
        if (cfg.dataset.num_classes < 2) throw config_error("dataset.num_classes: must be >= 2");
        if (cfg.dataset.feature_dim < 1) throw config_error("dataset.feature_dim: must be >= 1");
        if (cfg.dataset.per_class < 1) throw config_error("dataset.per_class: must be >= 1");
        const double qmin = 1.0 / cfg.dataset.num_classes;
        if (cfg.noniid_q < qmin - 1e-12 || cfg.noniid_q > 1.0) {
            throw config_error("partition.q: must lie in [1/L, 1] = [" + std::to_string(qmin) +
                               ", 1]");
        }
        if (cfg.n_clients < cfg.dataset.num_classes) {
            throw config_error("n_clients: need at least one client per class group");
        }
    } else {
        if (cfg.dataset.images_path.empty() || cfg.dataset.labels_path.empty()) {
            throw config_error("dataset.paths: images and labels required for mnist");
        }
        // q range and n_clients >= L are checked after loading.
    }
    if (cfg.arch.kind == ArchKind::mlp) {
        if (cfg.arch.hidden.empty()) throw config_error("arch.hidden: required for mlp");
        for (int h : cfg.arch.hidden) {
            if (h < 1) throw config_error("arch.hidden: layer widths must be >= 1");
        }
    }
    if (cfg.n_clients < 1) throw config_error("n_clients: must be >= 1");
    if (cfg.clients_per_round < 0 || cfg.resolved_clients_per_round() > cfg.n_clients) {
        throw config_error("clients_per_round: must lie in [1, n_clients]");
    }
    if (cfg.rounds < 1) throw config_error("rounds: must be >= 1");
    if (!(cfg.global_lr > 0.0)) throw config_error("global_lr: must be > 0");
    if (cfg.batch_size < 1) throw config_error("local.batch_size: must be >= 1");
    if (cfg.local_lr < 0.0 || !(cfg.resolved_local_lr() > 0.0)) {
        throw config_error("local.lr: must be > 0");
    }
    if (cfg.local_epochs < 1) throw config_error("local.epochs: must be >= 1");
    if (cfg.root.size < 1) throw config_error("root.size: must be >= 1");
    if (cfg.root.bias_p < 0.0 || cfg.root.bias_p > 1.0) {
        throw config_error("root.bias_p: must lie in [0, 1]");
    }
    if (cfg.rule.name == "krum") {
        if (!cfg.rule.params.krum_f) throw config_error("rule.params.f: required for krum");
        if (*cfg.rule.params.krum_f < 0) throw config_error("rule.params.f: must be >= 0");
    } else if (cfg.rule.name == "trim_mean") {
        if (!cfg.rule.params.trim_k) throw config_error("rule.params.k: required for trim_mean");
        if (*cfg.rule.params.trim_k < 0) throw config_error("rule.params.k: must be >= 0");
    } else if (cfg.rule.name != "fedavg" && cfg.rule.name != "median" &&
               cfg.rule.name != "fltrust" && cfg.rule.name != "fltg") {
        throw config_error("rule.name: unknown rule '" + cfg.rule.name + "'");
    }
    if (cfg.attack.malicious_fraction < 0.0 || cfg.attack.malicious_fraction >= 1.0) {
        throw config_error("attack.fraction: must lie in [0, 1)");
    }
    if (cfg.attack.minmax_tol <= 0.0) throw config_error("attack.params.tol: must be > 0");
    if (cfg.attack.kind == AttackKind::krum_attack && cfg.attack.krum_grid.empty()) {
        throw config_error("attack.params.krum_grid: must be nonempty");
    }
}

SimState make_initial_state(const ExperimentConfig& cfg) {
    validate_config(cfg);

    Dataset source;
    IdxImageMeta meta;
    if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
        source = generate_synthetic(cfg.dataset.num_classes, cfg.dataset.feature_dim,
                                    cfg.dataset.per_class,
                                    mix_seed(cfg.master_seed, seed_tag::data));
    } else {
        source = load_idx(cfg.dataset.images_path, cfg.dataset.labels_path, &meta);
        const double qmin = 1.0 / source.num_classes;
        if (cfg.noniid_q < qmin - 1e-12 || cfg.noniid_q > 1.0) {
            throw config_error("partition.q: must lie in [1/L, 1]");
        }
        if (cfg.n_clients < source.num_classes) {
            throw config_error("n_clients: need at least one client per class group");
        }
    }

    // Hold out the test set before anything else sees the data.
    std::vector<int> order(source.size());
    std::iota(order.begin(), order.end(), 0);
    {
        auto rng = make_rng(mix_seed(cfg.master_seed, seed_tag::test_split));
        std::shuffle(order.begin(), order.end(), rng);
    }
    const auto test_count = static_cast<std::size_t>(
        std::llround(kTestFraction * static_cast<double>(source.size())));

    SimState state;
    state.test.num_classes = source.num_classes;
    state.test.feature_dim = source.feature_dim;
    Dataset pool;
    pool.num_classes = source.num_classes;
    pool.feature_dim = source.feature_dim;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < test_count ? state.test : pool).examples.push_back(source.examples[order[k]]);
    }

    // The server keeps the root dataset; those examples leave the client pool.
    std::vector<int> root_indices;
    state.root = sample_root_with_indices(pool, cfg.root.size, cfg.root.bias_p,
                                          mix_seed(cfg.master_seed, seed_tag::root_sample),
                                          root_indices);
    {
        std::vector<char> taken(pool.size(), 0);
        for (int idx : root_indices) {
            taken[idx] = 1;
        }
        Dataset remaining;
        remaining.num_classes = pool.num_classes;
        remaining.feature_dim = pool.feature_dim;
        for (std::size_t k = 0; k < pool.size(); ++k) {
            if (!taken[k]) {
                remaining.examples.push_back(std::move(pool.examples[k]));
            }
        }
        pool = std::move(remaining);
    }

    PartitionParams part;
    part.num_clients = cfg.n_clients;
    part.noniid_degree = cfg.noniid_q;
    part.seed = mix_seed(cfg.master_seed, seed_tag::partition);
    state.shards = partition_noniid(pool, part);

    state.trigger = cfg.attack.trigger;
    if (state.trigger.pixel_positions.empty()) {
        state.trigger = default_trigger(source.feature_dim, meta.rows, meta.cols);
    }

    state.poisoned_shards.resize(cfg.n_clients);
    if (data_side_attack(cfg.attack.kind)) {
        AttackSpec resolved = cfg.attack;
        resolved.trigger = state.trigger;
        const int m = num_malicious(cfg.attack, cfg.n_clients);
        for (int i = 0; i < m; ++i) {
            state.poisoned_shards[i] = poison_shard(
                state.shards[i], resolved,
                mix_seed(cfg.master_seed, seed_tag::poison, static_cast<std::uint64_t>(i)));
        }
    }

    ModelArch arch;
    arch.kind = cfg.arch.kind;
    arch.hidden = cfg.arch.hidden;
    arch.feature_dim = source.feature_dim;
    arch.num_classes = source.num_classes;
    state.global = init_model(arch, mix_seed(cfg.master_seed, seed_tag::model_init));
    state.prev_global_update.assign(state.global.params.size(), 0.0);
    return state;
}

RoundMetrics run_round(SimState& state, const ExperimentConfig& cfg, int t) {
    const int n = cfg.n_clients;
    const int per_round = cfg.resolved_clients_per_round();
    const auto tu = static_cast<std::uint64_t>(t);

    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    {
        auto rng = make_rng(mix_seed(cfg.master_seed, seed_tag::client_sample, tu));
        std::shuffle(ids.begin(), ids.end(), rng);
    }
    ids.resize(per_round);
    std::sort(ids.begin(), ids.end());

    LocalTrainParams local;
    local.batch_size = cfg.batch_size;
    local.lr = cfg.resolved_local_lr();
    local.epochs = cfg.local_epochs;

    const bool poisoned_data = data_side_attack(cfg.attack.kind);
    std::vector<std::pair<int, ParamVector>> updates;
    updates.reserve(ids.size());
    for (int id : ids) {
        const Dataset& shard = (poisoned_data && is_malicious(cfg.attack, id, n))
                                   ? state.poisoned_shards[id]
                                   : state.shards[id];
        if (shard.empty()) {
            continue; // a client that drew no examples sits the round out
        }
        local.seed = mix_seed(cfg.master_seed, seed_tag::local_train, tu,
                              static_cast<std::uint64_t>(id));
        updates.emplace_back(id, model_update(state.global, shard, local));
    }

    local.seed = mix_seed(cfg.master_seed, seed_tag::server_train, tu);
    ParamVector server_update = model_update(state.global, state.root, local);

    RoundContext ctx;
    ctx.round = t;
    ctx.n_clients = n;
    ctx.seed = cfg.master_seed;
    updates = apply_attack(ctx, updates, cfg.attack);

    AggregationInput in;
    in.client_updates = std::move(updates);
    in.server_update = std::move(server_update);
    if (t >= 2) {
        in.prev_global_update = state.prev_global_update;
    }
    in.round = t;

    RoundMetrics metrics;
    metrics.round = t;
    try {
        const AggregationResult res = aggregate(cfg.rule.name, in, cfg.rule.params);
        for (std::size_t j = 0; j < state.global.params.size(); ++j) {
            state.global.params[j] += cfg.global_lr * res.global_update[j];
        }
        state.prev_global_update = res.global_update;
        metrics.per_client_scores = res.scores;
        metrics.filtered_ids = res.filtered;
    } catch (const empty_aggregate_error&) {
        metrics.aggregate_skipped = true;
    }

    metrics.test_accuracy = evaluate_accuracy(state.global, state.test);
    if (cfg.attack.kind == AttackKind::scaling_backdoor) {
        metrics.backdoor_success = backdoor_success_rate(state.global, state.test, state.trigger);
    }
    return metrics;
}

std::vector<RoundMetrics> run_experiment(const ExperimentConfig& cfg) {
    SimState state = make_initial_state(cfg);
    std::vector<RoundMetrics> all;
    all.reserve(cfg.rounds);
    for (int t = 1; t <= cfg.rounds; ++t) {
        all.push_back(run_round(state, cfg, t));
    }
    return all;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "bias_p") return SweepAxis::bias_p;
    if (name == "noniid_q") return SweepAxis::noniid_q;
    if (name == "malicious_fraction") return SweepAxis::malicious_fraction;
    throw config_error("unknown sweep axis '" + name + "'");
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig cfg = base;
    switch (axis) {
    case SweepAxis::bias_p:
        cfg.root.bias_p = value;
        break;
    case SweepAxis::noniid_q:
        cfg.noniid_q = value;
        break;
    case SweepAxis::malicious_fraction:
        cfg.attack.malicious_fraction = value;
        break;
    }
    return cfg;
}

std::map<double, RoundMetrics> sweep(const ExperimentConfig& base, SweepAxis axis,
                                     const std::vector<double>& values) {
    if (values.empty()) {
        throw config_error("sweep: empty value list");
    }
    std::map<double, RoundMetrics> out;
    for (double v : values) {
        const auto metrics = run_experiment(apply_sweep_value(base, axis, v));
        out[v] = metrics.back();
    }
    return out;
}

} // namespace flsim
