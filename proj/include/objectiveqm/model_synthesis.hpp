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
 * @file    model_synthesis.hpp
 * @brief   Builds micro-models whose detection-conditional statistics match
 *          quantum targets.
 *
 * Two constructions:
 *  - synthesize_product: one class per joint outcome tuple of a list of
 *    observables, weighted by the product of Born marginals. Reproduces every
 *    single-observable probability, not joint correlations.
 *  - synthesize_chsh: mixture of deterministic local strategies for the
 *    two-setting, two-party scenario, where each setting answers +1, -1 or
 *    "no registration". The weights solve a linear feasibility problem that
 *    pins the four coincidence-conditional correlations and the per-side
 *    detection rate.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "objectiveqm/error.hpp"
#include "objectiveqm/lp_feasibility.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/quantum_oracle.hpp"

namespace objectiveqm {

inline constexpr double kPruneWeight = 1e-12;

/// Drops classes lighter than kPruneWeight and renormalizes the rest.
inline void prune_and_normalize(std::vector<MicroClass> &classes, double threshold = kPruneWeight) {
    std::erase_if(classes, [threshold](const MicroClass &c) { return !(c.weight >= threshold); });
    double total = 0.0;
    for (const auto &c : classes) {
        total += c.weight;
    }
    require(total > 0.0, ErrorKind::InvariantViolation, "all class weights pruned");
    for (auto &c : classes) {
        c.weight /= total;
    }
}

/// A value outside the spectrum to stand for "no registration": 0 when free, otherwise max + 1.
inline double pick_no_registration_value(const std::vector<double> &spectrum) {
    if (std::find(spectrum.begin(), spectrum.end(), 0.0) == spectrum.end()) {
        return 0.0;
    }
    return *std::max_element(spectrum.begin(), spectrum.end()) + 1.0;
}

inline MicroModel synthesize_product(const DensityState &rho, const std::vector<SpectralObservable> &observables,
                                     double detect) {
    require(detect > 0.0 && detect <= 1.0, ErrorKind::InvalidInput, "detection probability must lie in (0, 1]");
    require(!observables.empty(), ErrorKind::InvalidInput, "no observables to synthesize");
    MicroModel model;
    model.mode = detect == 1.0 ? DetectionMode::Deterministic : DetectionMode::Stochastic;
    model.target = rho;
    model.quantum_observables = observables;

    std::vector<std::vector<double>> marginals;
    for (const auto &q : observables) {
        require(q.dim() == rho.dim(), ErrorKind::InvalidInput, "observable '" + q.label() + "' has the wrong dimension");
        const auto spectrum = q.spectrum();
        model.add_elementary(q.label(), spectrum, pick_no_registration_value(spectrum));
        std::vector<double> p;
        for (double a : spectrum) {
            p.push_back(born_probability(rho, q, OutcomeSet({a})));
        }
        marginals.push_back(std::move(p));
    }

    // Odometer over outcome tuples.
    std::vector<std::size_t> digit(observables.size(), 0);
    while (true) {
        MicroClass cls;
        cls.weight = 1.0;
        for (std::size_t k = 0; k < observables.size(); ++k) {
            const double value = observables[k].branches()[digit[k]].eigenvalue;
            cls.weight *= marginals[k][digit[k]];
            cls.responses[observables[k].label()] = {detect, value};
        }
        model.classes.push_back(std::move(cls));
        std::size_t k = 0;
        while (k < digit.size() && ++digit[k] == marginals[k].size()) {
            digit[k] = 0;
            ++k;
        }
        if (k == digit.size()) {
            break;
        }
    }
    prune_and_normalize(model.classes, 1e-15);
    require_valid(model);
    return model;
}

enum class LocalOutcome { Plus, Minus, NoRegistration };

inline constexpr std::array<LocalOutcome, 3> kLocalOutcomes = {LocalOutcome::Plus, LocalOutcome::Minus,
                                                               LocalOutcome::NoRegistration};

/// Deterministic answer of one side for each of its settings.
struct LocalStrategy {
    std::vector<LocalOutcome> responses;

    bool detects(std::size_t setting) const {
        return responses.at(setting) != LocalOutcome::NoRegistration;
    }
    /// ±1 when detected; 0 otherwise.
    double signed_value(std::size_t setting) const {
        switch (responses.at(setting)) {
            case LocalOutcome::Plus:
                return 1.0;
            case LocalOutcome::Minus:
                return -1.0;
            case LocalOutcome::NoRegistration:
                return 0.0;
        }
        return 0.0;
    }
};

using JointStrategy = std::pair<LocalStrategy, LocalStrategy>;

inline std::vector<LocalStrategy> enumerate_local_strategies(std::size_t settings) {
    require(settings >= 1, ErrorKind::InvalidInput, "a side needs at least one setting");
    std::vector<LocalStrategy> out;
    std::vector<std::size_t> digit(settings, 0);
    while (true) {
        LocalStrategy s;
        for (std::size_t d : digit) {
            s.responses.push_back(kLocalOutcomes[d]);
        }
        out.push_back(std::move(s));
        std::size_t k = 0;
        while (k < settings && ++digit[k] == kLocalOutcomes.size()) {
            digit[k] = 0;
            ++k;
        }
        if (k == settings) {
            break;
        }
    }
    return out;
}

/// All pairs of local strategies: 3^|A| · 3^|B| of them.
inline std::vector<JointStrategy> enumerate_joint_strategies(std::size_t settings_a, std::size_t settings_b) {
    const auto lhs = enumerate_local_strategies(settings_a);
    const auto rhs = enumerate_local_strategies(settings_b);
    std::vector<JointStrategy> out;
    out.reserve(lhs.size() * rhs.size());
    for (const auto &a : lhs) {
        for (const auto &b : rhs) {
            out.emplace_back(a, b);
        }
    }
    return out;
}

/// How the joint detection rate of each setting pair is constrained.
enum class CoincidenceRule {
    Independent,  // every pair is jointly registered with probability eta², as for independent detectors
    Free,         // only the per-side rates are fixed
};

/// Coincidence-conditional correlations E[x][y] for settings x, y ∈ {0, 1} and a
/// common per-side detection rate.
struct ChshTarget {
    std::array<std::array<double, 2>, 2> correlations{};
    double eta = 1.0;
    CoincidenceRule coincidences = CoincidenceRule::Independent;
};

inline const char *coincidence_rule_name(CoincidenceRule rule) {
    return rule == CoincidenceRule::Independent ? "independent" : "free";
}

inline void validate_target(const ChshTarget &target) {
    for (const auto &row : target.correlations) {
        for (double e : row) {
            require(std::isfinite(e) && std::abs(e) <= 1.0, ErrorKind::InvalidInput, "|E(x,y)| must be at most 1");
        }
    }
    require(target.eta > 0.0 && target.eta <= 1.0, ErrorKind::InvalidInput, "eta must lie in (0, 1]");
}

inline const std::array<std::string, 2> kChshSideA = {"A1", "A2"};
inline const std::array<std::string, 2> kChshSideB = {"B1", "B2"};

inline std::string chsh_pair_label(std::size_t x, std::size_t y) {
    return kChshSideA[x] + "*" + kChshSideB[y];
}

/// Setting angles in the x-z plane giving E11 + E12 + E21 - E22 = -2√2 on the singlet.
inline constexpr std::array<double, 2> kChshAnglesA = {0.0, std::numbers::pi / 2.0};
inline constexpr std::array<double, 2> kChshAnglesB = {std::numbers::pi / 4.0, -std::numbers::pi / 4.0};

/// Singlet correlations at the optimal CHSH angles, from the quantum oracle.
inline ChshTarget chsh_optimal_target(double eta) {
    const auto rho = singlet_state();
    ChshTarget t;
    t.eta = eta;
    for (std::size_t x = 0; x < 2; ++x) {
        const auto a = spin_observable(planar_direction(kChshAnglesA[x]), kChshSideA[x]);
        for (std::size_t y = 0; y < 2; ++y) {
            const auto b = spin_observable(planar_direction(kChshAnglesB[y]), kChshSideB[y]);
            t.correlations[x][y] = correlation(rho, a, b);
        }
    }
    return t;
}

/// Empty bipartite model with the four dichotomic settings and their pair composites.
inline MicroModel chsh_registry() {
    MicroModel model;
    model.mode = DetectionMode::Deterministic;
    for (const auto &l : kChshSideA) {
        model.add_elementary(l, {1.0, -1.0}, 0.0);
    }
    for (const auto &l : kChshSideB) {
        model.add_elementary(l, {1.0, -1.0}, 0.0);
    }
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            model.add_composite(chsh_pair_label(x, y), {kChshSideA[x], kChshSideB[y]}, ValueCombiner::Product, 0.0);
        }
    }
    return model;
}

/// Linear system over the 81 joint-strategy weights: four linearized correlation
/// rows, four per-side detection rows, normalization, and under the Independent
/// rule one coincidence row per setting pair.
inline FeasibilityProblem chsh_feasibility_problem(const ChshTarget &target,
                                                   const std::vector<JointStrategy> &strategies) {
    validate_target(target);
    const std::size_t ns = strategies.size();
    FeasibilityProblem p;
    p.variables = ns;
    auto coincidence = [&](std::size_t s, std::size_t x, std::size_t y) {
        return strategies[s].first.detects(x) && strategies[s].second.detects(y) ? 1.0 : 0.0;
    };
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            std::vector<double> row(ns, 0.0);
            for (std::size_t s = 0; s < ns; ++s) {
                const double ab = strategies[s].first.signed_value(x) * strategies[s].second.signed_value(y);
                row[s] = coincidence(s, x, y) * (ab - target.correlations[x][y]);
            }
            p.add_row(std::move(row), 0.0);
        }
    }
    for (std::size_t side = 0; side < 2; ++side) {
        for (std::size_t setting = 0; setting < 2; ++setting) {
            std::vector<double> row(ns, 0.0);
            for (std::size_t s = 0; s < ns; ++s) {
                const auto &local = side == 0 ? strategies[s].first : strategies[s].second;
                row[s] = local.detects(setting) ? 1.0 : 0.0;
            }
            p.add_row(std::move(row), target.eta);
        }
    }
    p.add_row(std::vector<double>(ns, 1.0), 1.0);
    if (target.coincidences == CoincidenceRule::Independent) {
        for (std::size_t x = 0; x < 2; ++x) {
            for (std::size_t y = 0; y < 2; ++y) {
                std::vector<double> row(ns, 0.0);
                for (std::size_t s = 0; s < ns; ++s) {
                    row[s] = coincidence(s, x, y);
                }
                p.add_row(std::move(row), target.eta * target.eta);
            }
        }
    }
    return p;
}

inline double chsh_conditional_s(const MicroModel &model) {
    std::array<double, 4> e{};
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            const auto c = conditional_correlation(model, kChshSideA[x], kChshSideB[y]);
            require(c.has_value(), ErrorKind::DomainError, "no coincidences for " + chsh_pair_label(x, y));
            e[2 * x + y] = *c;
        }
    }
    return chsh_combination(e[0], e[1], e[2], e[3]);
}

inline double chsh_unconditional_s(const MicroModel &model) {
    return chsh_combination(unconditional_correlation(model, "A1", "B1"), unconditional_correlation(model, "A1", "B2"),
                            unconditional_correlation(model, "A2", "B1"), unconditional_correlation(model, "A2", "B2"));
}

struct ChshSynthesis {
    std::optional<MicroModel> model;  // empty when the targets are outside the local polytope
    LpResult lp;
    double max_target_error = 0.0;  // max |E_model - E_target| over the four pairs
    double conditional_s = 0.0;
    double unconditional_s = 0.0;

    bool feasible() const noexcept {
        return model.has_value();
    }
};

inline ChshSynthesis synthesize_chsh(const ChshTarget &target) {
    const auto strategies = enumerate_joint_strategies(2, 2);
    const auto problem = chsh_feasibility_problem(target, strategies);
    ChshSynthesis out;
    out.lp = lp_feasibility(problem);
    if (!out.lp.feasible()) {
        return out;
    }

    MicroModel model = chsh_registry();
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        MicroClass cls;
        cls.weight = out.lp.x[s];
        for (std::size_t k = 0; k < 2; ++k) {
            const auto &a = strategies[s].first;
            const auto &b = strategies[s].second;
            // Undetected settings still carry a spectrum value; it never contributes.
            cls.responses[kChshSideA[k]] = {a.detects(k) ? 1.0 : 0.0, a.signed_value(k) < 0.0 ? -1.0 : 1.0};
            cls.responses[kChshSideB[k]] = {b.detects(k) ? 1.0 : 0.0, b.signed_value(k) < 0.0 ? -1.0 : 1.0};
        }
        model.classes.push_back(std::move(cls));
    }
    prune_and_normalize(model.classes);
    require_valid(model);

    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            const auto c = conditional_correlation(model, kChshSideA[x], kChshSideB[y]);
            require(c.has_value(), ErrorKind::DomainError,
                    "synthesized model has no coincidences for " + chsh_pair_label(x, y));
            out.max_target_error = std::max(out.max_target_error, std::abs(*c - target.correlations[x][y]));
        }
    }
    require(out.max_target_error <= 1e-9, ErrorKind::NumericallyAmbiguous,
            "synthesized model misses its targets by " + std::to_string(out.max_target_error));
    out.conditional_s = chsh_conditional_s(model);
    out.unconditional_s = chsh_unconditional_s(model);
    require(std::abs(out.unconditional_s) <= 2.0 + 1e-12, ErrorKind::InvariantViolation,
            "local model exceeds the CHSH bound");
    out.model = std::move(model);
    return out;
}

struct ThresholdProbe {
    double eta = 0.0;
    bool feasible = false;
};

struct ThresholdResult {
    double eta_star = 0.0;                // largest probed feasible eta
    double eta_upper = 1.0;               // smallest probed infeasible eta (1 when η* = 1)
    std::vector<ThresholdProbe> probes;   // in probing order
    std::size_t bisection_solves = 0;     // excludes the initial eta = 1 probe
};

/// Largest eta at which the targets are reachable, to within tol, by bisection on [0, 1].
///
/// Feasibility is monotone: discarding each side's registrations independently with
/// probability 1 - λ keeps the conditional correlations, scales the per-side rates by λ
/// and the coincidence rates by λ², and stays inside the strategy polytope.
inline ThresholdResult eta_threshold(const std::array<std::array<double, 2>, 2> &correlations, double tol,
                                     CoincidenceRule coincidences = CoincidenceRule::Independent) {
    require(tol > 1e-4 && tol < 0.1, ErrorKind::InvalidInput, "tol must lie in (1e-4, 0.1)");
    const auto strategies = enumerate_joint_strategies(2, 2);
    ThresholdResult r;
    auto probe = [&](double eta) {
        const ChshTarget t{correlations, eta, coincidences};
        const bool ok = lp_feasibility(chsh_feasibility_problem(t, strategies)).feasible();
        for (const auto &p : r.probes) {
            const bool violates = (p.feasible && !ok && eta < p.eta) || (!p.feasible && ok && eta > p.eta);
            require(!violates, ErrorKind::InvariantViolation, "feasibility is not monotone in eta");
        }
        r.probes.push_back({eta, ok});
        return ok;
    };
    if (probe(1.0)) {
        r.eta_star = 1.0;
        return r;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        ++r.bisection_solves;
        if (probe(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Everything probed was infeasible; by monotonicity so is every eta ≥ hi, which includes tol.
    if (lo == 0.0) {
        fail(ErrorKind::NoThreshold, "targets are infeasible even at eta = " + std::to_string(tol));
    }
    r.eta_star = lo;
    r.eta_upper = hi;
    return r;
}

}  // namespace objectiveqm
