#pragma once

#include <vector>

namespace flsim {

// Flat model-parameter vector. Every update and every model in one run has
// the same length d. Accumulations over ParamVectors are fixed left-to-right
// so runs are bit-reproducible.
using ParamVector = std::vector<double>;

// Inner product. Throws dimension_error on length mismatch.
double dot(const ParamVector& a, const ParamVector& b);

// Euclidean norm, >= 0.
double l2_norm(const ParamVector& a);

// dot(a,b) / (|a||b|), clamped to [-1, 1] to absorb rounding.
// Throws degenerate_vector_error if either norm is zero.
double cosine_similarity(const ParamVector& a, const ParamVector& b);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// (target_norm / |v|) * v. Direction preserved.
// Throws degenerate_vector_error if |v| is zero.
ParamVector rescale_to_norm(const ParamVector& v, double target_norm);

// (sum_j w_j v_j) / (sum_j w_j). Throws empty_aggregate_error when the
// weights sum to <= 0 and dimension_error on count/length mismatch.
ParamVector weighted_mean(const std::vector<ParamVector>& vectors,
                          const std::vector<double>& weights);

} // namespace flsim
