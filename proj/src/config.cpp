#include "flsim/config.hpp"

#include <fstream>
#include <set>

#include "flsim/errors.hpp"

namespace flsim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw config_error(where + key + ": unknown key");
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string(key) + ": wrong type");
    }
}

ArchKind parse_arch_kind(const std::string& s) {
    if (s == "softmax_regression") return ArchKind::softmax_regression;
    if (s == "mlp") return ArchKind::mlp;
    throw config_error("arch.kind: unknown kind '" + s + "'");
}

AttackKind parse_attack_kind(const std::string& s) {
    if (s == "none") return AttackKind::none;
    if (s == "label_flip") return AttackKind::label_flip;
    if (s == "scaling_backdoor") return AttackKind::scaling_backdoor;
    if (s == "krum_attack") return AttackKind::krum_attack;
    if (s == "trim_attack") return AttackKind::trim_attack;
    if (s == "min_max") return AttackKind::min_max;
    throw config_error("attack.kind: unknown kind '" + s + "'");
}

std::string attack_kind_name(AttackKind k) {
    switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::label_flip: return "label_flip";
    case AttackKind::scaling_backdoor: return "scaling_backdoor";
    case AttackKind::krum_attack: return "krum_attack";
    case AttackKind::trim_attack: return "trim_attack";
    case AttackKind::min_max: return "min_max";
    }
    return "none";
}

MinMaxDeviation parse_deviation(const std::string& s) {
    if (s == "unit") return MinMaxDeviation::unit;
    if (s == "sign") return MinMaxDeviation::sign;
    if (s == "std") return MinMaxDeviation::std_dev;
    throw config_error("attack.params.deviation: unknown mode '" + s + "'");
}

std::string deviation_name(MinMaxDeviation d) {
    switch (d) {
    case MinMaxDeviation::unit: return "unit";
    case MinMaxDeviation::sign: return "sign";
    case MinMaxDeviation::std_dev: return "std";
    }
    return "unit";
}

} // namespace

ExperimentConfig parse_config_json(const json& j) {
    if (!j.is_object()) {
        throw config_error("config: top level must be a JSON object");
    }
    reject_unknown_keys(j, "", {"dataset", "arch", "n_clients", "clients_per_round", "rounds",
                                "global_lr", "local", "partition", "root", "rule", "attack",
                                "master_seed"});

    ExperimentConfig cfg;

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown_keys(d, "dataset.",
                            {"kind", "paths", "num_classes", "feature_dim", "per_class"});
        const std::string kind = get_or<std::string>(d, "kind", "synthetic");
        if (kind == "synthetic") {
            cfg.dataset.kind = DatasetSpec::Kind::synthetic;
        } else if (kind == "mnist") {
            cfg.dataset.kind = DatasetSpec::Kind::mnist;
        } else {
            throw config_error("dataset.kind: unknown kind '" + kind + "'");
        }
        cfg.dataset.num_classes = get_or<int>(d, "num_classes", cfg.dataset.num_classes);
        cfg.dataset.feature_dim = get_or<int>(d, "feature_dim", cfg.dataset.feature_dim);
        cfg.dataset.per_class = get_or<int>(d, "per_class", cfg.dataset.per_class);
        if (d.contains("paths")) {
            const json& p = d.at("paths");
            reject_unknown_keys(p, "dataset.paths.", {"images", "labels"});
            cfg.dataset.images_path = get_or<std::string>(p, "images", "");
            cfg.dataset.labels_path = get_or<std::string>(p, "labels", "");
        }
    }

    if (j.contains("arch")) {
        const json& a = j.at("arch");
        reject_unknown_keys(a, "arch.", {"kind", "hidden"});
        cfg.arch.kind = parse_arch_kind(get_or<std::string>(a, "kind", "softmax_regression"));
        cfg.arch.hidden = get_or<std::vector<int>>(a, "hidden", {});
    }

    cfg.n_clients = get_or<int>(j, "n_clients", cfg.n_clients);
    cfg.clients_per_round = get_or<int>(j, "clients_per_round", 0);
    cfg.rounds = get_or<int>(j, "rounds", cfg.rounds);
    cfg.global_lr = get_or<double>(j, "global_lr", cfg.global_lr);

    if (j.contains("local")) {
        const json& l = j.at("local");
        reject_unknown_keys(l, "local.", {"batch_size", "lr", "epochs"});
        cfg.batch_size = get_or<int>(l, "batch_size", cfg.batch_size);
        cfg.local_lr = get_or<double>(l, "lr", 0.0);
        cfg.local_epochs = get_or<int>(l, "epochs", cfg.local_epochs);
    }

    if (j.contains("partition")) {
        const json& p = j.at("partition");
        reject_unknown_keys(p, "partition.", {"q"});
        cfg.noniid_q = get_or<double>(p, "q", cfg.noniid_q);
    }

    if (j.contains("root")) {
        const json& r = j.at("root");
        reject_unknown_keys(r, "root.", {"size", "bias_p"});
        cfg.root.size = get_or<int>(r, "size", cfg.root.size);
        cfg.root.bias_p = get_or<double>(r, "bias_p", cfg.root.bias_p);
    }

    if (j.contains("rule")) {
        const json& r = j.at("rule");
        reject_unknown_keys(r, "rule.", {"name", "params"});
        cfg.rule.name = get_or<std::string>(r, "name", cfg.rule.name);
        if (r.contains("params")) {
            const json& p = r.at("params");
            reject_unknown_keys(p, "rule.params.", {"f", "k"});
            if (p.contains("f")) cfg.rule.params.krum_f = p.at("f").get<int>();
            if (p.contains("k")) cfg.rule.params.trim_k = p.at("k").get<int>();
        }
    }

    if (j.contains("attack")) {
        const json& a = j.at("attack");
        reject_unknown_keys(a, "attack.", {"kind", "fraction", "params"});
        cfg.attack.kind = parse_attack_kind(get_or<std::string>(a, "kind", "none"));
        cfg.attack.malicious_fraction =
            get_or<double>(a, "fraction", cfg.attack.kind == AttackKind::none ? 0.0 : 0.2);
        if (a.contains("params")) {
            const json& p = a.at("params");
            reject_unknown_keys(p, "attack.params.",
                                {"scale_factor", "deviation", "tol", "flip_mode", "flip_target",
                                 "trigger", "krum_grid"});
            cfg.attack.scale_factor = get_or<double>(p, "scale_factor", 0.0);
            if (p.contains("deviation")) {
                cfg.attack.deviation = parse_deviation(p.at("deviation").get<std::string>());
            }
            cfg.attack.minmax_tol = get_or<double>(p, "tol", cfg.attack.minmax_tol);
            const std::string flip = get_or<std::string>(p, "flip_mode", "remap");
            if (flip == "remap") {
                cfg.attack.flip_mode = LabelFlipMode::remap;
            } else if (flip == "to_target") {
                cfg.attack.flip_mode = LabelFlipMode::to_target;
            } else {
                throw config_error("attack.params.flip_mode: unknown mode '" + flip + "'");
            }
            cfg.attack.flip_target = get_or<int>(p, "flip_target", 0);
            if (p.contains("trigger")) {
                const json& t = p.at("trigger");
                reject_unknown_keys(t, "attack.params.trigger.", {"positions", "value", "target"});
                cfg.attack.trigger.pixel_positions = get_or<std::vector<int>>(t, "positions", {});
                cfg.attack.trigger.pixel_value = get_or<double>(t, "value", 1.0);
                cfg.attack.trigger.target_label = get_or<int>(t, "target", 0);
            }
            cfg.attack.krum_grid =
                get_or<std::vector<double>>(p, "krum_grid", cfg.attack.krum_grid);
        }
    }

    cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", cfg.master_seed);

    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw config_error("malformed config " + path + ": " + e.what());
    }
    return parse_config_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    json d;
    d["kind"] = cfg.dataset.kind == DatasetSpec::Kind::synthetic ? "synthetic" : "mnist";
    if (cfg.dataset.kind == DatasetSpec::Kind::synthetic) {
        d["num_classes"] = cfg.dataset.num_classes;
        d["feature_dim"] = cfg.dataset.feature_dim;
        d["per_class"] = cfg.dataset.per_class;
    } else {
        d["paths"] = {{"images", cfg.dataset.images_path}, {"labels", cfg.dataset.labels_path}};
    }
    j["dataset"] = d;

    json a;
    a["kind"] = cfg.arch.kind == ArchKind::softmax_regression ? "softmax_regression" : "mlp";
    if (cfg.arch.kind == ArchKind::mlp) {
        a["hidden"] = cfg.arch.hidden;
    }
    j["arch"] = a;

    j["n_clients"] = cfg.n_clients;
    j["clients_per_round"] = cfg.resolved_clients_per_round();
    j["rounds"] = cfg.rounds;
    j["global_lr"] = cfg.global_lr;
    j["local"] = {{"batch_size", cfg.batch_size},
                  {"lr", cfg.resolved_local_lr()},
                  {"epochs", cfg.local_epochs}};
    j["partition"] = {{"q", cfg.noniid_q}};
    j["root"] = {{"size", cfg.root.size}, {"bias_p", cfg.root.bias_p}};

    json rule;
    rule["name"] = cfg.rule.name;
    json rp = json::object();
    if (cfg.rule.params.krum_f) rp["f"] = *cfg.rule.params.krum_f;
    if (cfg.rule.params.trim_k) rp["k"] = *cfg.rule.params.trim_k;
    if (!rp.empty()) rule["params"] = rp;
    j["rule"] = rule;

    json attack;
    attack["kind"] = attack_kind_name(cfg.attack.kind);
    attack["fraction"] = cfg.attack.malicious_fraction;
    json ap;
    ap["scale_factor"] = cfg.attack.scale_factor;
    ap["deviation"] = deviation_name(cfg.attack.deviation);
    ap["tol"] = cfg.attack.minmax_tol;
    ap["flip_mode"] = cfg.attack.flip_mode == LabelFlipMode::remap ? "remap" : "to_target";
    ap["flip_target"] = cfg.attack.flip_target;
    if (!cfg.attack.trigger.pixel_positions.empty()) {
        ap["trigger"] = {{"positions", cfg.attack.trigger.pixel_positions},
                         {"value", cfg.attack.trigger.pixel_value},
                         {"target", cfg.attack.trigger.target_label}};
    }
    ap["krum_grid"] = cfg.attack.krum_grid;
    attack["params"] = ap;
    j["attack"] = attack;

    j["master_seed"] = cfg.master_seed;
    return j;
}

} // namespace flsim
