// Copyright 2026 The objectiveqm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file    ensemble_engine.hpp
 * @brief   Seeded Monte Carlo preparation and measurement of object ensembles,
 *          with exact integer counters and frequency identities.
 *
 * Every random draw comes from a CounterStream keyed by (seed, object id,
 * tag): preparation uses the tag "prepare", detection of an elementary
 * observable uses the observable's label. Results therefore do not depend on
 * the number of worker threads.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "objectiveqm/error.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/random_stream.hpp"

namespace objectiveqm {

/// Exact ratio of 64-bit integers, kept reduced with a positive denominator.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Fraction make(__int128 n, __int128 d) {
        require(d != 0, ErrorKind::InvalidInput, "fraction with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n;
        __int128 b = d;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        const __int128 g = a == 0 ? 1 : a;
        n /= g;
        d /= g;
        require(n <= INT64_MAX && n >= INT64_MIN && d <= INT64_MAX, ErrorKind::InvariantViolation,
                "fraction overflow");
        return {static_cast<std::int64_t>(n), static_cast<std::int64_t>(d)};
    }

    double value() const {
        return static_cast<double>(num) / static_cast<double>(den);
    }

    friend Fraction operator*(const Fraction &a, const Fraction &b) {
        return make(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
    }
    friend Fraction operator+(const Fraction &a, const Fraction &b) {
        return make(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                    static_cast<__int128>(a.den) * b.den);
    }
    friend bool operator==(const Fraction &, const Fraction &) = default;
};

struct PhysicalObject {
    std::uint64_t id = 0;
    std::size_t class_index = 0;

    friend bool operator==(const PhysicalObject &, const PhysicalObject &) = default;
};

struct OutcomeRecord {
    std::uint64_t object_id = 0;
    double outcome = 0.0;  // in Λ, or the observable's a0 when not registered
    bool detected = false;

    friend bool operator==(const OutcomeRecord &, const OutcomeRecord &) = default;
};

/// Outcomes of one observable measured on every object of an ensemble.
struct MeasurementRun {
    std::string observable;
    double a0 = 0.0;
    std::vector<OutcomeRecord> records;
};

/// Draws n objects with ids first_id, first_id + 1, ... and classes distributed by the model weights.
inline std::vector<PhysicalObject> prepare(const MicroModel &model, std::size_t n, std::uint64_t seed,
                                           std::uint64_t first_id = 0, std::size_t workers = 1) {
    require(n >= 1, ErrorKind::InvalidInput, "ensemble size must be at least 1");
    require_valid(model);
    std::vector<double> cumulative;
    cumulative.reserve(model.classes.size());
    double acc = 0.0;
    for (const auto &c : model.classes) {
        acc += c.weight;
        cumulative.push_back(acc);
    }
    const std::uint64_t tag = fnv1a64("prepare");
    std::vector<PhysicalObject> objects(n);
    parallel_chunks(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const std::uint64_t id = first_id + k;
            CounterStream stream(seed, id, tag);
            const double u = stream.uniform() * acc;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            std::size_t cls = static_cast<std::size_t>(it - cumulative.begin());
            if (cls >= cumulative.size()) {
                cls = cumulative.size() - 1;
            }
            objects[k] = {id, cls};
        }
    });
    return objects;
}

/// Measures `label` on every object. Each elementary constituent is registered
/// independently with its class detection probability; any miss yields a0.
inline MeasurementRun measure_ensemble(const std::vector<PhysicalObject> &objects, const std::string &label,
                                       const MicroModel &model, std::uint64_t seed, std::size_t workers = 1) {
    const auto &obs = model.observable(label);
    const auto parts = model.elementary_constituents(label);
    std::vector<std::uint64_t> tags;
    for (const auto &p : parts) {
        tags.push_back(fnv1a64(p));
    }
    // Flattened per-class responses so the sampling loop does no map lookups.
    const std::size_t m = parts.size();
    std::vector<ClassResponse> table(model.classes.size() * m);
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            table[i * m + j] = detail::response_of(model.classes[i], parts[j]);
        }
    }
    for (const auto &o : objects) {
        require(o.class_index < model.classes.size(), ErrorKind::InvalidInput, "object class outside the model");
    }

    MeasurementRun run{label, obs.a0, std::vector<OutcomeRecord>(objects.size())};
    parallel_chunks(objects.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto &o = objects[k];
            bool detected = true;
            double value = combiner_identity(obs.combiner);
            for (std::size_t j = 0; j < m; ++j) {
                const auto &r = table[o.class_index * m + j];
                CounterStream stream(seed, o.id, tags[j]);
                if (!(stream.uniform() < r.detect)) {
                    detected = false;
                }
                value = obs.elementary() ? r.value : apply_combiner(obs.combiner, value, r.value);
            }
            run.records[k] = {o.id, detected ? value : obs.a0, detected};
        }
    });
    return run;
}

struct ClassCounters {
    std::int64_t n = 0;            // N^(i)
    std::int64_t n0 = 0;           // N0^(i)
    std::int64_t nf = 0;           // N_F^(i): objects possessing F (includes undetected when a0 ∈ Δ)
    std::int64_t nf_detected = 0;  // detected objects with outcome in Δ

    ClassCounters &operator+=(const ClassCounters &o) {
        n += o.n;
        n0 += o.n0;
        nf += o.nf;
        nf_detected += o.nf_detected;
        return *this;
    }
};

struct IdentityCheck {
    bool class_identity = true;   // per-class frequency factorization, every class with detections
    bool state_identity = true;   // ensemble-level factorization, when anything was detected
    bool dichotomy = true;        // N_F^(i) ∈ {0, N^(i) - N0^(i)} for a0 ∉ Δ
    bool counters = true;         // Σ N^(i) = N, Σ N0^(i) = N0, 0 ≤ N0^(i) ≤ N^(i)

    bool all() const {
        return class_identity && state_identity && dichotomy && counters;
    }
};

struct EnsembleTally {
    std::int64_t n = 0;
    std::int64_t n0 = 0;
    bool contains_a0 = false;
    std::vector<ClassCounters> per_class;

    std::int64_t nf() const {
        std::int64_t s = 0;
        for (const auto &c : per_class) {
            s += c.nf;
        }
        return s;
    }
    std::int64_t nf_detected() const {
        std::int64_t s = 0;
        for (const auto &c : per_class) {
            s += c.nf_detected;
        }
        return s;
    }

    Fraction freq_total() const {
        return Fraction::make(nf(), n);
    }
    Fraction freq_detect() const {
        return Fraction::make(n - n0, n);
    }
    /// Fraction of detected objects with outcome in Δ; empty when nothing was detected.
    std::optional<Fraction> freq_conditional() const {
        if (n == n0) {
            return std::nullopt;
        }
        return Fraction::make(nf_detected(), n - n0);
    }

    /// Counter merge; associative and commutative.
    EnsembleTally &merge(const EnsembleTally &other) {
        require(contains_a0 == other.contains_a0, ErrorKind::InvalidInput, "merging tallies of different properties");
        if (per_class.size() < other.per_class.size()) {
            per_class.resize(other.per_class.size());
        }
        for (std::size_t i = 0; i < other.per_class.size(); ++i) {
            per_class[i] += other.per_class[i];
        }
        n += other.n;
        n0 += other.n0;
        return *this;
    }

    /// Checks the frequency identities exactly in rational arithmetic.
    IdentityCheck check_identities() const {
        IdentityCheck out;
        std::int64_t sum_n = 0;
        std::int64_t sum_n0 = 0;
        for (const auto &c : per_class) {
            sum_n += c.n;
            sum_n0 += c.n0;
            if (c.n0 < 0 || c.n0 > c.n) {
                out.counters = false;
            }
            const std::int64_t detected = c.n - c.n0;
            if (!contains_a0 && c.nf != 0 && c.nf != detected) {
                out.dichotomy = false;
            }
            if (detected > 0) {
                const Fraction lhs = Fraction::make(c.nf, c.n);
                const Fraction rhs = Fraction::make(detected, c.n) * Fraction::make(c.nf, detected);
                if (!(lhs == rhs)) {
                    out.class_identity = false;
                }
            }
        }
        if (sum_n != n || sum_n0 != n0) {
            out.counters = false;
        }
        if (n > n0 && n > 0) {
            const Fraction lhs = Fraction::make(nf(), n);
            Fraction inner{0, 1};
            for (const auto &c : per_class) {
                inner = inner + Fraction::make(c.nf, n - n0);
            }
            const Fraction rhs = Fraction::make(n - n0, n) * inner;
            if (!(lhs == rhs)) {
                out.state_identity = false;
            }
        }
        return out;
    }
};

inline EnsembleTally tally(const std::vector<PhysicalObject> &objects, const MeasurementRun &run,
                           const MacroProperty &property, std::size_t class_count) {
    require(run.observable == property.observable, ErrorKind::InvalidInput,
            "records are for '" + run.observable + "' but the property is on '" + property.observable + "'");
    require(run.records.size() == objects.size(), ErrorKind::InvalidInput, "record count does not match objects");
    EnsembleTally t;
    t.contains_a0 = property.delta.contains_a0;
    t.per_class.resize(class_count);
    for (std::size_t k = 0; k < objects.size(); ++k) {
        const auto &o = objects[k];
        const auto &r = run.records[k];
        require(r.object_id == o.id, ErrorKind::InvalidInput, "record/object id mismatch");
        require(o.class_index < class_count, ErrorKind::InvalidInput, "object class outside the model");
        auto &c = t.per_class[o.class_index];
        ++c.n;
        ++t.n;
        if (!r.detected) {
            ++c.n0;
            ++t.n0;
            if (property.delta.contains_a0) {
                ++c.nf;
            }
        } else if (property.delta.contains(r.outcome)) {
            ++c.nf;
            ++c.nf_detected;
        }
    }
    return t;
}

struct ConvergenceReport {
    ProbabilityBreakdown analytic;
    double freq_total = 0.0;
    double freq_detect = 0.0;
    std::optional<double> freq_conditional;
    double dev_total = 0.0;
    double dev_detect = 0.0;
    double dev_conditional = 0.0;
    double se_total = 0.0;
    double se_detect = 0.0;
    double se_conditional = 0.0;
    EnsembleTally tally;

    /// Every deviation within k binomial standard errors (plus rounding slack).
    bool within(double k) const {
        constexpr double slack = 1e-12;
        bool ok = dev_total <= k * se_total + slack && dev_detect <= k * se_detect + slack;
        if (analytic.conditional.has_value() != freq_conditional.has_value()) {
            return false;
        }
        if (analytic.conditional) {
            ok = ok && dev_conditional <= k * se_conditional + slack;
        }
        return ok;
    }
};

inline double binomial_se(double p, double n) {
    return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0;
}

/// Simulates n objects, measures F's observable and compares frequencies with the analytic breakdown.
inline ConvergenceReport convergence_report(const MicroModel &model, const MacroProperty &property, std::size_t n,
                                            std::uint64_t seed, std::size_t workers = 1) {
    require(n >= 1000, ErrorKind::InvalidInput, "convergence runs need at least 1000 objects");
    ConvergenceReport r;
    r.analytic = state_breakdown(model, property);
    const auto objects = prepare(model, n, seed, 0, workers);
    const auto run = measure_ensemble(objects, property.observable, model, seed, workers);
    r.tally = tally(objects, run, property, model.classes.size());
    r.freq_total = r.tally.freq_total().value();
    r.freq_detect = r.tally.freq_detect().value();
    if (auto c = r.tally.freq_conditional()) {
        r.freq_conditional = c->value();
    }
    const double nd = static_cast<double>(n);
    r.dev_total = std::abs(r.freq_total - r.analytic.total);
    r.dev_detect = std::abs(r.freq_detect - r.analytic.detect);
    r.se_total = binomial_se(r.analytic.total, nd);
    r.se_detect = binomial_se(r.analytic.detect, nd);
    if (r.analytic.conditional && r.freq_conditional) {
        r.dev_conditional = std::abs(*r.freq_conditional - *r.analytic.conditional);
        r.se_conditional =
            binomial_se(*r.analytic.conditional, static_cast<double>(r.tally.n - r.tally.n0));
    }
    return r;
}

}  // namespace objectiveqm
