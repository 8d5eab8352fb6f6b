#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flsim/data.hpp"
#include "flsim/vecmath.hpp"

namespace flsim {

enum class AttackKind { none, label_flip, scaling_backdoor, krum_attack, trim_attack, min_max };

enum class MinMaxDeviation { unit, sign, std_dev };

// Which clients misbehave and how. The malicious set is always the first
// ceil(fraction * n) client ids.
struct AttackSpec {
    AttackKind kind = AttackKind::none;
    double malicious_fraction = 0.0;

    double scale_factor = 0.0; // scaling_backdoor; 0 means "total client count"
    LabelFlipMode flip_mode = LabelFlipMode::remap;
    int flip_target = 0;
    TriggerSpec trigger; // empty positions -> default trigger at setup
    MinMaxDeviation deviation = MinMaxDeviation::unit;
    double minmax_tol = 1e-4;
    std::vector<double> krum_grid = {10, 5, 2, 1, 0.5, 0.2, 0.1, 0.05, 0.01};
};

int num_malicious(const AttackSpec& spec, int n_clients);
bool is_malicious(const AttackSpec& spec, int client_id, int n_clients);

// Data-side poisoning for label_flip and scaling_backdoor shards.
// Throws config_error for other attack kinds.
Dataset poison_shard(const Dataset& shard, const AttackSpec& spec, std::uint64_t seed);

// scale_factor * update.
ParamVector forge_scaling(const ParamVector& update, double scale_factor);

// All malicious updates set to -lambda * sign(mean(benign)), with lambda the
// largest grid value for which a simulated Krum over benign+malicious picks
// a malicious update (falls back to the smallest grid value).
std::vector<ParamVector> forge_krum_attack(const std::vector<ParamVector>& benign,
                                           int num_malicious,
                                           const std::vector<double>& epsilon_grid);

// Per coordinate, malicious values land just outside the benign range on the
// side opposite the benign mean.
std::vector<ParamVector> forge_trim_attack(const std::vector<ParamVector>& benign,
                                           int num_malicious, std::uint64_t seed);

// Largest gamma in [0, 200] (bisection, |hi-lo| <= tol) such that
// mean(benign) + gamma * deviation stays within the benign pairwise-distance
// envelope of every benign update. Returns 200 when even that is feasible.
double min_max_gamma(const std::vector<ParamVector>& benign, const ParamVector& deviation,
                     double tol);

// Malicious updates all equal mean(benign) + gamma * p with p derived from
// the deviation mode (unit: -m/|m|; sign: -sign(m); std_dev: -coordinate
// stddev). Throws degenerate_attack_error when p has zero norm.
std::vector<ParamVector> forge_min_max(const std::vector<ParamVector>& benign,
                                       int num_malicious, MinMaxDeviation deviation,
                                       double tol);

// Same, with the deviation vector supplied by the caller.
std::vector<ParamVector> forge_min_max_with_deviation(const std::vector<ParamVector>& benign,
                                                      int num_malicious,
                                                      const ParamVector& deviation,
                                                      double tol);

struct RoundContext {
    int round = 1;
    int n_clients = 0;
    std::uint64_t seed = 0;
};

// Replaces the round's malicious updates per the spec. Data-side attacks
// (label_flip, scaling_backdoor shards) already happened at training time;
// update-side forging sees every benign update of the round.
std::vector<std::pair<int, ParamVector>> apply_attack(
    const RoundContext& ctx, const std::vector<std::pair<int, ParamVector>>& updates,
    const AttackSpec& spec);

} // namespace flsim
