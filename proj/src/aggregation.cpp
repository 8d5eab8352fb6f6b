#include "flsim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flsim/errors.hpp"

namespace flsim {

namespace {

void require_nonempty(const AggregationInput& in, const char* rule) {
    if (in.client_updates.empty()) {
        throw empty_aggregate_error(empty_aggregate_error::reason::no_clients,
                                    std::string(rule) + ": no client updates");
    }
}

const ParamVector& require_server_update(const AggregationInput& in, const char* rule) {
    if (!in.server_update) {
        throw config_error(std::string(rule) + ": server_update missing");
    }
    if (l2_norm(*in.server_update) == 0.0) {
        throw degenerate_vector_error(std::string(rule) + ": zero-norm server_update");
    }
    return *in.server_update;
}

double squared_distance(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) {
        throw dimension_error("squared_distance: length mismatch");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

} // namespace

AggregationResult fedavg(const AggregationInput& in) {
    require_nonempty(in, "fedavg");
    const std::size_t d = in.client_updates.front().second.size();
    AggregationResult res;
    res.global_update.assign(d, 0.0);
    for (const auto& [id, g] : in.client_updates) {
        if (g.size() != d) {
            throw dimension_error("fedavg: update length mismatch");
        }
        for (std::size_t j = 0; j < d; ++j) {
            res.global_update[j] += g[j];
        }
        res.scores[id] = 1.0;
    }
    const double inv = 1.0 / static_cast<double>(in.client_updates.size());
    for (double& v : res.global_update) {
        v *= inv;
    }
    return res;
}

AggregationResult krum(const AggregationInput& in, int f) {
    require_nonempty(in, "krum");
    const int n = static_cast<int>(in.client_updates.size());
    if (n <= 2 * f + 2) {
        throw precondition_error("krum: requires n > 2f + 2, got n=" + std::to_string(n) +
                                 " f=" + std::to_string(f));
    }
    const int neighbors = n - f - 2;

    AggregationResult res;
    int best_idx = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        std::vector<double> dists;
        dists.reserve(n - 1);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            dists.push_back(squared_distance(in.client_updates[i].second,
                                             in.client_updates[j].second));
        }
        std::sort(dists.begin(), dists.end());
        double score = 0.0;
        for (int k = 0; k < neighbors; ++k) {
            score += dists[k];
        }
        const int id = in.client_updates[i].first;
        res.scores[id] = score;
        if (score < best_score ||
            (score == best_score && id < in.client_updates[best_idx].first)) {
            best_score = score;
            best_idx = i;
        }
    }
    res.global_update = in.client_updates[best_idx].second;
    return res;
}

AggregationResult trim_mean(const AggregationInput& in, int k) {
    require_nonempty(in, "trim_mean");
    const int n = static_cast<int>(in.client_updates.size());
    if (2 * k >= n) {
        throw precondition_error("trim_mean: requires 2k < n, got n=" + std::to_string(n) +
                                 " k=" + std::to_string(k));
    }
    const std::size_t d = in.client_updates.front().second.size();
    AggregationResult res;
    res.global_update.assign(d, 0.0);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) {
            column[i] = in.client_updates[i].second[j];
        }
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (int i = k; i < n - k; ++i) {
            sum += column[i];
        }
        res.global_update[j] = sum / static_cast<double>(n - 2 * k);
    }
    for (const auto& [id, g] : in.client_updates) {
        (void)g;
        res.scores[id] = 1.0;
    }
    return res;
}

AggregationResult median(const AggregationInput& in) {
    require_nonempty(in, "median");
    const int n = static_cast<int>(in.client_updates.size());
    const std::size_t d = in.client_updates.front().second.size();
    AggregationResult res;
    res.global_update.assign(d, 0.0);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) {
            column[i] = in.client_updates[i].second[j];
        }
        std::sort(column.begin(), column.end());
        res.global_update[j] =
            (n % 2 == 1) ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    for (const auto& [id, g] : in.client_updates) {
        (void)g;
        res.scores[id] = 1.0;
    }
    return res;
}

AggregationResult fltrust(const AggregationInput& in) {
    require_nonempty(in, "fltrust");
    const ParamVector& g0 = require_server_update(in, "fltrust");
    const double g0_norm = l2_norm(g0);

    AggregationResult res;
    std::vector<ParamVector> survivors;
    std::vector<double> weights;
    for (const auto& [id, g] : in.client_updates) {
        double ts = 0.0;
        if (l2_norm(g) > 0.0) {
            ts = relu(cosine_similarity(g, g0));
        }
        res.scores[id] = ts;
        if (ts > 0.0) {
            survivors.push_back(rescale_to_norm(g, g0_norm));
            weights.push_back(ts);
        } else {
            res.filtered.insert(id);
        }
    }
    if (survivors.empty()) {
        throw empty_aggregate_error(empty_aggregate_error::reason::all_filtered,
                                    "fltrust: every client has zero trust score");
    }
    res.global_update = weighted_mean(survivors, weights);
    return res;
}

AggregationResult fltg(const AggregationInput& in) {
    require_nonempty(in, "fltg");
    const ParamVector& g0 = require_server_update(in, "fltg");
    const double g0_norm = l2_norm(g0);

    AggregationResult res;
    // Survivor set S': clients with relu(cos(g_i, g_0)) > 0.
    std::vector<int> survivor_ids;
    std::vector<const ParamVector*> survivor_updates;
    std::vector<double> relu_cos;
    for (const auto& [id, g] : in.client_updates) {
        double s = 0.0;
        if (l2_norm(g) > 0.0) {
            s = relu(cosine_similarity(g, g0));
        }
        if (s > 0.0) {
            survivor_ids.push_back(id);
            survivor_updates.push_back(&g);
            relu_cos.push_back(s);
        } else {
            res.scores[id] = 0.0;
            res.filtered.insert(id);
        }
    }
    if (survivor_ids.empty()) {
        throw empty_aggregate_error(empty_aggregate_error::reason::all_filtered,
                                    "fltg: every client filtered by the cosine gate");
    }

    // A missing or zero previous global update degrades to the round-1 path.
    const bool have_prev =
        in.prev_global_update && l2_norm(*in.prev_global_update) > 0.0;

    std::vector<double> weights(survivor_ids.size());
    if (in.round <= 1 || !have_prev) {
        weights = relu_cos;
    } else {
        // Reference = survivor least aligned with the previous global update,
        // ties to the lowest client id.
        int ref = 0;
        double ref_cos = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < survivor_ids.size(); ++i) {
            const double c = cosine_similarity(*survivor_updates[i], *in.prev_global_update);
            if (c < ref_cos || (c == ref_cos && survivor_ids[i] < survivor_ids[ref])) {
                ref_cos = c;
                ref = static_cast<int>(i);
            }
        }
        for (std::size_t i = 0; i < survivor_ids.size(); ++i) {
            weights[i] = (static_cast<int>(i) == ref)
                             ? 0.0
                             : 1.0 - cosine_similarity(*survivor_updates[i],
                                                       *survivor_updates[ref]);
        }
    }

    for (std::size_t i = 0; i < survivor_ids.size(); ++i) {
        res.scores[survivor_ids[i]] = weights[i];
    }

    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw empty_aggregate_error(empty_aggregate_error::reason::zero_scores,
                                    "fltg: survivor scores sum to zero");
    }

    std::vector<ParamVector> normalized;
    normalized.reserve(survivor_ids.size());
    for (const ParamVector* g : survivor_updates) {
        normalized.push_back(rescale_to_norm(*g, g0_norm));
    }
    res.global_update = weighted_mean(normalized, weights);
    return res;
}

AggregationResult aggregate(std::string_view rule_name, const AggregationInput& in,
                            const RuleParams& params) {
    if (rule_name == "fedavg") {
        return fedavg(in);
    }
    if (rule_name == "krum") {
        if (!params.krum_f) {
            throw config_error("krum: rule.params.f required");
        }
        return krum(in, *params.krum_f);
    }
    if (rule_name == "trim_mean") {
        if (!params.trim_k) {
            throw config_error("trim_mean: rule.params.k required");
        }
        return trim_mean(in, *params.trim_k);
    }
    if (rule_name == "median") {
        return median(in);
    }
    if (rule_name == "fltrust") {
        if (!in.server_update) {
            throw config_error("fltrust: server_update missing");
        }
        return fltrust(in);
    }
    if (rule_name == "fltg") {
        if (!in.server_update) {
            throw config_error("fltg: server_update missing");
        }
        return fltg(in);
    }
    throw config_error("unknown aggregation rule '" + std::string(rule_name) + "'");
}

} // namespace flsim
