#include "flsim/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "flsim/aggregation.hpp"
#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

namespace {

ParamVector mean_of(const std::vector<ParamVector>& vs) {
    const std::size_t d = vs.front().size();
    ParamVector m(d, 0.0);
    for (const ParamVector& v : vs) {
        for (std::size_t j = 0; j < d; ++j) {
            m[j] += v[j];
        }
    }
    for (double& x : m) {
        x /= static_cast<double>(vs.size());
    }
    return m;
}

double distance(const ParamVector& a, const ParamVector& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

int num_malicious(const AttackSpec& spec, int n_clients) {
    if (spec.kind == AttackKind::none) {
        return 0;
    }
    return static_cast<int>(std::ceil(spec.malicious_fraction * n_clients));
}

bool is_malicious(const AttackSpec& spec, int client_id, int n_clients) {
    return client_id < num_malicious(spec, n_clients);
}

Dataset poison_shard(const Dataset& shard, const AttackSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
    case AttackKind::label_flip:
        return spec.flip_mode == LabelFlipMode::remap
                   ? flip_labels_remap(shard)
                   : flip_labels_to_target(shard, spec.flip_target);
    case AttackKind::scaling_backdoor:
        return embed_trigger(shard, spec.trigger, 0.5, seed);
    default:
        throw config_error("poison_shard: attack kind has no data-side poisoning");
    }
}

ParamVector forge_scaling(const ParamVector& update, double scale_factor) {
    ParamVector out(update.size());
    for (std::size_t j = 0; j < update.size(); ++j) {
        out[j] = scale_factor * update[j];
    }
    return out;
}

std::vector<ParamVector> forge_krum_attack(const std::vector<ParamVector>& benign,
                                           int num_malicious,
                                           const std::vector<double>& epsilon_grid) {
    if (benign.empty() || num_malicious < 1 || epsilon_grid.empty()) {
        throw precondition_error("forge_krum_attack: need benign updates, malicious count "
                                 "and a lambda grid");
    }
    const ParamVector m = mean_of(benign);
    ParamVector direction(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        direction[j] = m[j] > 0.0 ? 1.0 : (m[j] < 0.0 ? -1.0 : 0.0);
    }

    std::vector<double> grid = epsilon_grid;
    std::sort(grid.begin(), grid.end(), std::greater<double>());

    auto craft = [&](double lambda) {
        ParamVector mal(m.size());
        for (std::size_t j = 0; j < m.size(); ++j) {
            mal[j] = -lambda * direction[j];
        }
        return mal;
    };

    // Simulate Krum with malicious clients occupying the lowest ids; the
    // candidate lambda succeeds when a malicious id wins.
    auto krum_selects_malicious = [&](const ParamVector& mal) {
        const int n = static_cast<int>(benign.size()) + num_malicious;
        if (n <= 2 * num_malicious + 2) {
            return false; // Krum undefined at this f; candidate cannot be verified
        }
        AggregationInput in;
        in.round = 1;
        for (int i = 0; i < num_malicious; ++i) {
            in.client_updates.emplace_back(i, mal);
        }
        for (std::size_t i = 0; i < benign.size(); ++i) {
            in.client_updates.emplace_back(num_malicious + static_cast<int>(i), benign[i]);
        }
        const AggregationResult res = krum(in, num_malicious);
        return res.global_update == in.client_updates.front().second;
    };

    double chosen = grid.back();
    for (double lambda : grid) {
        if (krum_selects_malicious(craft(lambda))) {
            chosen = lambda;
            break;
        }
    }
    return std::vector<ParamVector>(num_malicious, craft(chosen));
}

std::vector<ParamVector> forge_trim_attack(const std::vector<ParamVector>& benign,
                                           int num_malicious, std::uint64_t seed) {
    if (benign.empty() || num_malicious < 1) {
        throw precondition_error("forge_trim_attack: need benign updates and malicious count");
    }
    const std::size_t d = benign.front().size();
    std::vector<double> lo(d), hi(d);
    const ParamVector m = mean_of(benign);
    for (std::size_t j = 0; j < d; ++j) {
        double mn = benign.front()[j];
        double mx = benign.front()[j];
        for (const ParamVector& b : benign) {
            mn = std::min(mn, b[j]);
            mx = std::max(mx, b[j]);
        }
        double delta = mx - mn;
        if (delta == 0.0) {
            delta = 1e-6;
        }
        if (m[j] > 0.0) {
            lo[j] = mn - delta;
            hi[j] = mn;
        } else {
            lo[j] = mx;
            hi[j] = mx + delta;
        }
    }

    auto rng = make_rng(seed);
    std::vector<ParamVector> out(num_malicious, ParamVector(d));
    for (ParamVector& mal : out) {
        for (std::size_t j = 0; j < d; ++j) {
            std::uniform_real_distribution<double> uni(lo[j], hi[j]);
            mal[j] = uni(rng);
        }
    }
    return out;
}

double min_max_gamma(const std::vector<ParamVector>& benign, const ParamVector& deviation,
                     double tol) {
    const ParamVector m = mean_of(benign);
    double diameter = 0.0;
    for (std::size_t i = 0; i < benign.size(); ++i) {
        for (std::size_t j = i + 1; j < benign.size(); ++j) {
            diameter = std::max(diameter, distance(benign[i], benign[j]));
        }
    }

    auto feasible = [&](double gamma) {
        ParamVector candidate(m.size());
        for (std::size_t j = 0; j < m.size(); ++j) {
            candidate[j] = m[j] + gamma * deviation[j];
        }
        double worst = 0.0;
        for (const ParamVector& b : benign) {
            worst = std::max(worst, distance(candidate, b));
        }
        return worst <= diameter;
    };

    double lo = 0.0;
    double hi = 200.0;
    if (feasible(hi)) {
        return hi;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

std::vector<ParamVector> forge_min_max_with_deviation(const std::vector<ParamVector>& benign,
                                                      int num_malicious,
                                                      const ParamVector& deviation,
                                                      double tol) {
    if (benign.size() < 2 || num_malicious < 1) {
        throw precondition_error("forge_min_max: need at least two benign updates");
    }
    if (l2_norm(deviation) == 0.0) {
        throw degenerate_attack_error("forge_min_max: zero-norm deviation vector");
    }
    const ParamVector m = mean_of(benign);
    const double gamma = min_max_gamma(benign, deviation, tol);
    ParamVector mal(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        mal[j] = m[j] + gamma * deviation[j];
    }
    return std::vector<ParamVector>(num_malicious, mal);
}

std::vector<ParamVector> forge_min_max(const std::vector<ParamVector>& benign,
                                       int num_malicious, MinMaxDeviation deviation,
                                       double tol) {
    if (benign.size() < 2) {
        throw precondition_error("forge_min_max: need at least two benign updates");
    }
    const ParamVector m = mean_of(benign);
    const std::size_t d = m.size();
    ParamVector p(d, 0.0);
    switch (deviation) {
    case MinMaxDeviation::unit: {
        const double n = l2_norm(m);
        if (n == 0.0) {
            throw degenerate_attack_error("forge_min_max: zero-norm benign mean");
        }
        for (std::size_t j = 0; j < d; ++j) {
            p[j] = -m[j] / n;
        }
        break;
    }
    case MinMaxDeviation::sign:
        for (std::size_t j = 0; j < d; ++j) {
            p[j] = m[j] > 0.0 ? -1.0 : (m[j] < 0.0 ? 1.0 : 0.0);
        }
        break;
    case MinMaxDeviation::std_dev:
        for (std::size_t j = 0; j < d; ++j) {
            double var = 0.0;
            for (const ParamVector& b : benign) {
                const double diff = b[j] - m[j];
                var += diff * diff;
            }
            p[j] = -std::sqrt(var / static_cast<double>(benign.size()));
        }
        break;
    }
    return forge_min_max_with_deviation(benign, num_malicious, p, tol);
}

std::vector<std::pair<int, ParamVector>> apply_attack(
    const RoundContext& ctx, const std::vector<std::pair<int, ParamVector>>& updates,
    const AttackSpec& spec) {
    if (spec.kind == AttackKind::none || spec.kind == AttackKind::label_flip) {
        return updates; // data-side only (or no attack at all)
    }

    auto out = updates;
    std::vector<std::size_t> malicious_slots;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (is_malicious(spec, out[i].first, ctx.n_clients)) {
            malicious_slots.push_back(i);
        }
    }
    if (malicious_slots.empty()) {
        return out;
    }

    if (spec.kind == AttackKind::scaling_backdoor) {
        const double factor =
            spec.scale_factor > 0.0 ? spec.scale_factor : static_cast<double>(ctx.n_clients);
        for (std::size_t i : malicious_slots) {
            out[i].second = forge_scaling(out[i].second, factor);
        }
        return out;
    }

    std::vector<ParamVector> benign;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!is_malicious(spec, out[i].first, ctx.n_clients)) {
            benign.push_back(out[i].second);
        }
    }

    std::vector<ParamVector> forged;
    const int m = static_cast<int>(malicious_slots.size());
    switch (spec.kind) {
    case AttackKind::krum_attack:
        forged = forge_krum_attack(benign, m, spec.krum_grid);
        break;
    case AttackKind::trim_attack:
        forged = forge_trim_attack(benign, m, mix_seed(ctx.seed, seed_tag::attack,
                                                       static_cast<std::uint64_t>(ctx.round)));
        break;
    case AttackKind::min_max:
        forged = forge_min_max(benign, m, spec.deviation, spec.minmax_tol);
        break;
    default:
        throw config_error("apply_attack: unhandled attack kind");
    }
    for (int k = 0; k < m; ++k) {
        out[malicious_slots[k]].second = std::move(forged[k]);
    }
    return out;
}

} // namespace flsim
