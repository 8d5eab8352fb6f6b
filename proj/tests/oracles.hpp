// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written from the defining formulas with
// its own arithmetic helpers; it must not call into flsim internals beyond
// plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "flsim/aggregation.hpp"
#include "flsim/model.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const Vec& a, const Vec& b) { return dot(a, b) / (norm(a) * norm(b)); }

inline double max_abs_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double rel_norm_diff(const Vec& a, const Vec& b) {
    Vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double base = std::max(norm(a), norm(b));
    return base == 0.0 ? norm(d) : norm(d) / base;
}

// ---- Krum: brute-force selection ----------------------------------------

struct KrumOut {
    int selected = 0; // position in the update list
    Vec scores;
};

inline KrumOut krum(const std::vector<Vec>& updates, int f) {
    const int n = static_cast<int>(updates.size());
    const int m = n - f - 2;
    KrumOut out;
    out.scores.resize(n);
    for (int i = 0; i < n; ++i) {
        Vec dists;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < updates[i].size(); ++c) {
                const double d = updates[i][c] - updates[j][c];
                s += d * d;
            }
            dists.push_back(s);
        }
        std::sort(dists.begin(), dists.end());
        double score = 0.0;
        for (int k = 0; k < m; ++k) score += dists[k];
        out.scores[i] = score;
    }
    out.selected = 0;
    for (int i = 1; i < n; ++i) {
        if (out.scores[i] < out.scores[out.selected]) out.selected = i;
    }
    return out;
}

// ---- Trim-mean / median: sort-and-slice per coordinate -------------------

inline Vec trim_mean(const std::vector<Vec>& updates, int k) {
    const int n = static_cast<int>(updates.size());
    const std::size_t d = updates.front().size();
    Vec out(d);
    for (std::size_t c = 0; c < d; ++c) {
        Vec col(n);
        for (int i = 0; i < n; ++i) col[i] = updates[i][c];
        std::sort(col.begin(), col.end());
        double s = 0.0;
        for (int i = k; i < n - k; ++i) s += col[i];
        out[c] = s / (n - 2 * k);
    }
    return out;
}

inline Vec median(const std::vector<Vec>& updates) {
    const int n = static_cast<int>(updates.size());
    const std::size_t d = updates.front().size();
    Vec out(d);
    for (std::size_t c = 0; c < d; ++c) {
        Vec col(n);
        for (int i = 0; i < n; ++i) col[i] = updates[i][c];
        std::sort(col.begin(), col.end());
        out[c] = (n % 2 == 1) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
    return out;
}

// ---- FLTrust: trust-score weighted mean of rescaled updates --------------

struct TrustOut {
    Vec global;
    Vec scores; // one per position
    bool empty = false;
};

inline TrustOut fltrust(const std::vector<Vec>& updates, const Vec& g0) {
    const double g0n = norm(g0);
    TrustOut out;
    out.scores.assign(updates.size(), 0.0);
    Vec acc(g0.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (norm(updates[i]) == 0.0) continue;
        const double ts = std::max(0.0, cosine(updates[i], g0));
        out.scores[i] = ts;
        if (ts <= 0.0) continue;
        const double scale = g0n / norm(updates[i]);
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += ts * scale * updates[i][c];
        total += ts;
    }
    if (total <= 0.0) {
        out.empty = true;
        return out;
    }
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] /= total;
    out.global = acc;
    return out;
}

// ---- FLTG: literal step-by-step transcription -----------------------------

struct FltgOut {
    Vec global;
    Vec scores; // one per position
    bool empty = false;
};

inline FltgOut fltg(const std::vector<Vec>& updates, const Vec& g0, const Vec* prev,
                    int round) {
    const double g0n = norm(g0);
    FltgOut out;
    out.scores.assign(updates.size(), 0.0);

    std::vector<int> survivors;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (norm(updates[i]) == 0.0) continue;
        const double sp = std::max(0.0, cosine(updates[i], g0));
        if (sp > 0.0) {
            survivors.push_back(static_cast<int>(i));
            out.scores[i] = sp;
        }
    }
    if (survivors.empty()) {
        out.empty = true;
        return out;
    }

    const bool have_prev = prev != nullptr && norm(*prev) > 0.0;
    if (round >= 2 && have_prev) {
        int ref = survivors.front();
        double ref_cos = cosine(updates[ref], *prev);
        for (int i : survivors) {
            const double c = cosine(updates[i], *prev);
            if (c < ref_cos) {
                ref = i;
                ref_cos = c;
            }
        }
        for (int i : survivors) {
            // cos(g_ref, g_ref) = 1, so the reference scores exactly zero.
            out.scores[i] = i == ref ? 0.0 : 1.0 - cosine(updates[i], updates[ref]);
        }
    }

    double total = 0.0;
    for (int i : survivors) total += out.scores[i];
    if (total <= 0.0) {
        out.empty = true;
        return out;
    }
    Vec acc(g0.size(), 0.0);
    for (int i : survivors) {
        const double scale = g0n / norm(updates[i]);
        for (std::size_t c = 0; c < acc.size(); ++c) {
            acc[c] += out.scores[i] * scale * updates[i][c];
        }
    }
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] /= total;
    out.global = acc;
    return out;
}

// ---- Min-max feasibility ---------------------------------------------------

inline double benign_diameter(const std::vector<Vec>& benign) {
    double diam = 0.0;
    for (std::size_t i = 0; i < benign.size(); ++i) {
        for (std::size_t j = i + 1; j < benign.size(); ++j) {
            Vec d(benign[i].size());
            for (std::size_t c = 0; c < d.size(); ++c) d[c] = benign[i][c] - benign[j][c];
            diam = std::max(diam, norm(d));
        }
    }
    return diam;
}

inline bool min_max_feasible(const std::vector<Vec>& benign, const Vec& candidate) {
    const double diam = benign_diameter(benign);
    for (const Vec& b : benign) {
        Vec d(b.size());
        for (std::size_t c = 0; c < d.size(); ++c) d[c] = candidate[c] - b[c];
        if (norm(d) > diam) return false;
    }
    return true;
}

// ---- Central finite differences against a loss functional ----------------

template <typename LossFn>
Vec finite_difference_grad(const flsim::Model& m, LossFn loss_of, double eps = 1e-5) {
    Vec grad(m.params.size());
    flsim::Model probe = m;
    for (std::size_t j = 0; j < m.params.size(); ++j) {
        probe.params[j] = m.params[j] + eps;
        const double up = loss_of(probe);
        probe.params[j] = m.params[j] - eps;
        const double down = loss_of(probe);
        probe.params[j] = m.params[j];
        grad[j] = (up - down) / (2.0 * eps);
    }
    return grad;
}

// ---- Random aggregation instances -----------------------------------------

inline flsim::AggregationInput random_input(std::mt19937_64& rng, int min_n = 3, int max_n = 8,
                                            int max_d = 4, bool with_prev = false) {
    std::uniform_int_distribution<int> n_dist(min_n, max_n);
    std::uniform_int_distribution<int> d_dist(1, max_d);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    const int n = n_dist(rng);
    const int d = d_dist(rng);

    auto random_nonzero = [&] {
        Vec v(d);
        do {
            for (double& x : v) x = value(rng);
        } while (norm(v) == 0.0);
        return v;
    };

    flsim::AggregationInput in;
    in.round = 1;
    for (int i = 0; i < n; ++i) {
        in.client_updates.emplace_back(i, random_nonzero());
    }
    in.server_update = random_nonzero();
    if (with_prev) {
        in.prev_global_update = random_nonzero();
        in.round = 2;
    }
    return in;
}

inline std::vector<Vec> updates_of(const flsim::AggregationInput& in) {
    std::vector<Vec> out;
    for (const auto& [id, g] : in.client_updates) {
        (void)id;
        out.push_back(g);
    }
    return out;
}

} // namespace oracle
