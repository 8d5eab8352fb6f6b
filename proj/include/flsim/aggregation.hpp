#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flsim/vecmath.hpp"

namespace flsim {

// One round's worth of material for an aggregation rule. server_update is
// required by fltrust/fltg; prev_global_update by fltg for rounds >= 2.
struct AggregationInput {
    std::vector<std::pair<int, ParamVector>> client_updates;
    std::optional<ParamVector> server_update;
    std::optional<ParamVector> prev_global_update;
    int round = 1;
};

// scores are per-rule diagnostics: trust scores for fltrust, the 1-cos
// weights for fltg, raw distance sums for krum (lower is better there),
// and 1 elsewhere. filtered holds clients forced to zero weight.
struct AggregationResult {
    ParamVector global_update;
    std::map<int, double> scores;
    std::set<int> filtered;
};

AggregationResult fedavg(const AggregationInput& in);

// Selects the update whose summed squared distance to its n-f-2 nearest
// neighbors is minimal. Requires n > 2f + 2.
AggregationResult krum(const AggregationInput& in, int f);

// Coordinate-wise mean after dropping the k largest and k smallest values.
// Requires 2k < n.
AggregationResult trim_mean(const AggregationInput& in, int k);

// Coordinate-wise median; even n averages the two middle values.
AggregationResult median(const AggregationInput& in);

// Trust-score weighting: TS_i = relu(cos(g_i, g_0)), updates rescaled to
// |g_0|, weighted mean by TS.
AggregationResult fltrust(const AggregationInput& in);

// Angle-based aggregation with dynamic reference selection:
//  round 1: weights are relu-clipped cosines against the server update;
//  round >= 2: among survivors, the client least aligned with the previous
//  global update becomes the reference and each survivor is weighted by
//  1 - cos(g_i, g_ref). Survivors are rescaled to |g_0| before averaging.
AggregationResult fltg(const AggregationInput& in);

struct RuleParams {
    std::optional<int> krum_f;
    std::optional<int> trim_k;
};

// Dispatch by rule name: fedavg | krum | trim_mean | median | fltrust | fltg.
// Throws config_error for unknown names or missing inputs/params.
AggregationResult aggregate(std::string_view rule_name, const AggregationInput& in,
                            const RuleParams& params);

} // namespace flsim
