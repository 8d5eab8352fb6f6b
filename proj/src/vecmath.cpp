#include "flsim/vecmath.hpp"

#include <cmath>
#include <string>

#include "flsim/errors.hpp"

namespace flsim {

double dot(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) {
        throw dimension_error("dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(const ParamVector& a, const ParamVector& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw degenerate_vector_error("cosine_similarity: zero-norm input");
    }
    const double c = dot(a, b) / (na * nb);
    if (c > 1.0) return 1.0;
    if (c < -1.0) return -1.0;
    return c;
}

ParamVector rescale_to_norm(const ParamVector& v, double target_norm) {
    const double n = l2_norm(v);
    if (n == 0.0) {
        throw degenerate_vector_error("rescale_to_norm: zero-norm input");
    }
    const double s = target_norm / n;
    ParamVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = s * v[i];
    }
    return out;
}

ParamVector weighted_mean(const std::vector<ParamVector>& vectors,
                          const std::vector<double>& weights) {
    if (vectors.size() != weights.size()) {
        throw dimension_error("weighted_mean: " + std::to_string(vectors.size()) +
                              " vectors vs " + std::to_string(weights.size()) + " weights");
    }
    if (vectors.empty()) {
        throw empty_aggregate_error(empty_aggregate_error::reason::no_clients,
                                    "weighted_mean: no vectors");
    }
    const std::size_t d = vectors.front().size();
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw empty_aggregate_error(empty_aggregate_error::reason::zero_scores,
                                    "weighted_mean: weights sum to " + std::to_string(total));
    }
    ParamVector out(d, 0.0);
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        if (vectors[j].size() != d) {
            throw dimension_error("weighted_mean: vector length mismatch");
        }
        const double w = weights[j];
        for (std::size_t i = 0; i < d; ++i) {
            out[i] += w * vectors[j][i];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        out[i] /= total;
    }
    return out;
}

} // namespace flsim
