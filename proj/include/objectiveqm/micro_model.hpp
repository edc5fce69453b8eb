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
 * @file    micro_model.hpp
 * @brief   Objective hidden-property model: micro-classes with per-observable
 *          detection probability and definite outcome, and the exact
 *          total / detection / detection-conditional probability breakdowns.
 *
 * An object of class i measured with elementary observable A is registered
 * with probability d_i(A); when registered it always yields v_i(A). A class
 * possesses the micro-property (A, Δ) iff v_i(A) ∈ Δ. Composite observables
 * (joint measurements) are detected only if every constituent is detected,
 * each independently, and report the combined constituent values.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "objectiveqm/error.hpp"
#include "objectiveqm/quantum_oracle.hpp"

namespace objectiveqm {

enum class ValueCombiner { Product, Sum };

inline double apply_combiner(ValueCombiner combiner, double acc, double value) {
    return combiner == ValueCombiner::Product ? acc * value : acc + value;
}

inline double combiner_identity(ValueCombiner combiner) {
    return combiner == ValueCombiner::Product ? 1.0 : 0.0;
}

/// Observable A₀ with spectrum Λ and the adjoined no-registration outcome a0 ∉ Λ.
struct ExtendedObservable {
    std::string label;
    std::vector<double> spectrum;
    double a0 = 0.0;
    std::vector<std::string> constituents;  // empty for elementary observables
    ValueCombiner combiner = ValueCombiner::Product;

    bool elementary() const noexcept {
        return constituents.empty();
    }

    bool in_spectrum(double value) const {
        return std::find(spectrum.begin(), spectrum.end(), value) != spectrum.end();
    }

    friend bool operator==(const ExtendedObservable &, const ExtendedObservable &) = default;
};

/// F = (A₀, Δ).
struct MacroProperty {
    std::string observable;
    OutcomeSet delta;
};

struct ClassResponse {
    double detect = 1.0;
    double value = 0.0;

    friend bool operator==(const ClassResponse &, const ClassResponse &) = default;
};

struct MicroClass {
    double weight = 0.0;
    std::map<std::string, ClassResponse> responses;  // keyed by elementary observable label

    friend bool operator==(const MicroClass &, const MicroClass &) = default;
};

enum class DetectionMode { Deterministic, Stochastic };

struct MicroModel {
    std::vector<ExtendedObservable> observables;
    std::vector<MicroClass> classes;
    DetectionMode mode = DetectionMode::Stochastic;
    std::optional<DensityState> target;
    std::vector<SpectralObservable> quantum_observables;  // oracle counterparts, matched by label

    const ExtendedObservable *find_observable(const std::string &label) const {
        for (const auto &o : observables) {
            if (o.label == label) {
                return &o;
            }
        }
        return nullptr;
    }

    const ExtendedObservable &observable(const std::string &label) const {
        const auto *o = find_observable(label);
        require(o != nullptr, ErrorKind::NotFound, "unknown observable '" + label + "'");
        return *o;
    }

    const SpectralObservable *find_quantum_observable(const std::string &label) const {
        for (const auto &o : quantum_observables) {
            if (o.label() == label) {
                return &o;
            }
        }
        return nullptr;
    }

    /// Elementary labels a measurement of `label` actually probes.
    std::vector<std::string> elementary_constituents(const std::string &label) const {
        const auto &o = observable(label);
        if (o.elementary()) {
            return {o.label};
        }
        return o.constituents;
    }

    void add_elementary(std::string label, std::vector<double> spectrum, double a0 = 0.0) {
        require(find_observable(label) == nullptr, ErrorKind::InvalidInput, "duplicate observable '" + label + "'");
        observables.push_back({std::move(label), std::move(spectrum), a0, {}, ValueCombiner::Product});
    }

    /// Registers a joint measurement of elementary observables; its spectrum is the set of
    /// combined constituent values.
    void add_composite(std::string label, std::vector<std::string> parts, ValueCombiner combiner,
                       double a0 = 0.0) {
        require(find_observable(label) == nullptr, ErrorKind::InvalidInput, "duplicate observable '" + label + "'");
        require(!parts.empty(), ErrorKind::InvalidInput, "composite '" + label + "' has no constituents");
        std::set<double> values{combiner_identity(combiner)};
        for (const auto &p : parts) {
            const auto &c = observable(p);
            require(c.elementary(), ErrorKind::InvalidInput, "constituent '" + p + "' must be elementary");
            std::set<double> next;
            for (double acc : values) {
                for (double v : c.spectrum) {
                    next.insert(apply_combiner(combiner, acc, v));
                }
            }
            values = std::move(next);
        }
        observables.push_back(
            {std::move(label), std::vector<double>(values.begin(), values.end()), a0, std::move(parts), combiner});
    }
};

/// P^t, P^d and the detection-conditional P. `conditional` is empty when P^d = 0.
struct ProbabilityBreakdown {
    double total = 0.0;
    double detect = 0.0;
    std::optional<double> conditional;
};

namespace detail {

inline const MicroClass &class_at(const MicroModel &model, std::size_t i) {
    require(i < model.classes.size(), ErrorKind::NotFound, "unknown class index " + std::to_string(i));
    return model.classes[i];
}

inline const ClassResponse &response_of(const MicroClass &cls, const std::string &label) {
    auto it = cls.responses.find(label);
    require(it != cls.responses.end(), ErrorKind::NotFound, "class has no response for '" + label + "'");
    return it->second;
}

}  // namespace detail

/// Detection probability and registered value of class i for any registered observable.
inline ClassResponse class_response(const MicroModel &model, std::size_t i, const std::string &label) {
    const auto &cls = detail::class_at(model, i);
    const auto &obs = model.observable(label);
    if (obs.elementary()) {
        return detail::response_of(cls, label);
    }
    ClassResponse out{1.0, combiner_identity(obs.combiner)};
    for (const auto &part : obs.constituents) {
        const auto &r = detail::response_of(cls, part);
        out.detect *= r.detect;
        out.value = apply_combiner(obs.combiner, out.value, r.value);
    }
    return out;
}

inline ProbabilityBreakdown class_breakdown(const MicroModel &model, std::size_t i, const MacroProperty &property) {
    const ClassResponse r = class_response(model, i, property.observable);
    const double possessed = property.delta.contains(r.value) ? 1.0 : 0.0;
    ProbabilityBreakdown out;
    out.detect = r.detect;
    if (r.detect > 0.0) {
        out.conditional = possessed;
    }
    out.total = r.detect * possessed;
    if (property.delta.contains_a0) {
        out.total += 1.0 - r.detect;
    }
    return out;
}

inline ProbabilityBreakdown state_breakdown(const MicroModel &model, const MacroProperty &property) {
    ProbabilityBreakdown out;
    double detected_part = 0.0;
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        const double p = model.classes[i].weight;
        const auto b = class_breakdown(model, i, property);
        out.total += p * b.total;
        out.detect += p * b.detect;
        detected_part += p * b.detect * b.conditional.value_or(0.0);
    }
    if (out.detect > 0.0) {
        out.conditional = detected_part / out.detect;
    }
    return out;
}

namespace detail {

inline void require_dichotomic(const MicroModel &model, const std::string &label) {
    const auto &o = model.observable(label);
    require(o.elementary(), ErrorKind::DomainError, "'" + label + "' is not elementary");
    const bool dichotomic = o.spectrum.size() == 2 && o.in_spectrum(1.0) && o.in_spectrum(-1.0);
    require(dichotomic, ErrorKind::DomainError, "'" + label + "' is not dichotomic (+1/-1)");
}

}  // namespace detail

/// Correlation over jointly detected objects only; empty if coincidences are impossible.
inline std::optional<double> conditional_correlation(const MicroModel &model, const std::string &lhs,
                                                     const std::string &rhs) {
    detail::require_dichotomic(model, lhs);
    detail::require_dichotomic(model, rhs);
    double num = 0.0;
    double den = 0.0;
    for (const auto &cls : model.classes) {
        const auto &a = detail::response_of(cls, lhs);
        const auto &b = detail::response_of(cls, rhs);
        const double coincidence = cls.weight * a.detect * b.detect;
        num += coincidence * a.value * b.value;
        den += coincidence;
    }
    if (den <= 0.0) {
        return std::nullopt;
    }
    return num / den;
}

/// Correlation over all objects with undetected outcomes scored as 0.
inline double unconditional_correlation(const MicroModel &model, const std::string &lhs, const std::string &rhs) {
    detail::require_dichotomic(model, lhs);
    detail::require_dichotomic(model, rhs);
    double e = 0.0;
    for (const auto &cls : model.classes) {
        const auto &a = detail::response_of(cls, lhs);
        const auto &b = detail::response_of(cls, rhs);
        e += cls.weight * (a.detect * a.value) * (b.detect * b.value);
    }
    return e;
}

/// E11 + E12 + E21 - E22.
inline double chsh_combination(double e11, double e12, double e21, double e22) {
    return e11 + e12 + e21 - e22;
}

struct ConsistencyReport {
    std::vector<double> deviations;  // |P_S(F) - Tr(ρΠ_Δ)| per property, NaN where P^d = 0
    double max_deviation = 0.0;

    bool passes(double tolerance) const {
        return max_deviation <= tolerance;
    }
};

inline ConsistencyReport quantum_consistency(const MicroModel &model, const std::vector<MacroProperty> &properties) {
    require(model.target.has_value(), ErrorKind::InvalidInput, "model has no target state");
    ConsistencyReport report;
    for (const auto &f : properties) {
        require(!f.delta.contains_a0, ErrorKind::InvalidInput,
                "consistency is only defined for properties without the no-registration outcome");
        const auto *q = model.find_quantum_observable(f.observable);
        require(q != nullptr, ErrorKind::InvalidInput, "no quantum counterpart for '" + f.observable + "'");
        const double quantum = born_probability(*model.target, *q, f.delta);
        const auto b = state_breakdown(model, f);
        const double dev = b.conditional ? std::abs(*b.conditional - quantum) : std::numeric_limits<double>::infinity();
        report.deviations.push_back(dev);
        report.max_deviation = std::max(report.max_deviation, dev);
    }
    return report;
}

/// Every violated invariant as a human-readable line; empty iff the model is valid.
inline std::vector<std::string> validate_model(const MicroModel &model) {
    std::vector<std::string> out;
    std::set<std::string> labels;
    for (const auto &o : model.observables) {
        if (!labels.insert(o.label).second) {
            out.push_back("duplicate observable label '" + o.label + "'");
        }
        if (o.spectrum.empty()) {
            out.push_back("observable '" + o.label + "' has an empty spectrum");
        }
        if (o.in_spectrum(o.a0)) {
            out.push_back("no-registration outcome of '" + o.label + "' lies in its spectrum");
        }
        for (const auto &part : o.constituents) {
            const auto *c = model.find_observable(part);
            if (c == nullptr) {
                out.push_back("composite '" + o.label + "' refers to unknown observable '" + part + "'");
            } else if (!c->elementary()) {
                out.push_back("composite '" + o.label + "' refers to non-elementary '" + part + "'");
            }
        }
    }
    if (model.classes.empty()) {
        out.push_back("model has no classes");
    }
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        const auto &cls = model.classes[i];
        const std::string where = "class " + std::to_string(i);
        weight_sum += cls.weight;
        if (!(cls.weight > 0.0) || !std::isfinite(cls.weight)) {
            out.push_back(where + " has non-positive weight");
        }
        for (const auto &o : model.observables) {
            if (!o.elementary()) {
                continue;
            }
            auto it = cls.responses.find(o.label);
            if (it == cls.responses.end()) {
                out.push_back(where + " has no response for '" + o.label + "'");
                continue;
            }
            const auto &r = it->second;
            if (!(r.detect >= 0.0 && r.detect <= 1.0)) {
                out.push_back(where + " detection probability for '" + o.label + "' outside [0, 1]");
            }
            if (model.mode == DetectionMode::Deterministic && r.detect != 0.0 && r.detect != 1.0) {
                out.push_back(where + " detection for '" + o.label + "' is not 0 or 1 in a deterministic model");
            }
            if (!o.in_spectrum(r.value)) {
                out.push_back(where + " value for '" + o.label + "' is outside its spectrum");
            }
        }
        for (const auto &[label, r] : cls.responses) {
            const auto *o = model.find_observable(label);
            if (o == nullptr || !o->elementary()) {
                out.push_back(where + " has a response for unregistered elementary observable '" + label + "'");
            }
        }
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) {
        out.push_back("class weights sum to " + std::to_string(weight_sum) + ", not 1");
    }
    if (model.target) {
        for (const auto &q : model.quantum_observables) {
            if (q.dim() != model.target->dim()) {
                out.push_back("quantum observable '" + q.label() + "' does not match the target dimension");
            }
        }
    }
    return out;
}

inline void require_valid(const MicroModel &model) {
    const auto violations = validate_model(model);
    if (!violations.empty()) {
        fail(ErrorKind::InvalidInput, "invalid model: " + violations.front());
    }
}

}  // namespace objectiveqm
