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
 * @file    nogo_experiments.hpp
 * @brief   Block-wise CHSH estimation and Kochen-Specker context experiments
 *          on micro-models.
 *
 * CHSH: each of the four setting pairs is estimated on its own freshly
 * prepared ensemble, using only coincident detections.
 *
 * Kochen-Specker: a system is a list of ±1 observables plus contexts, each
 * context requiring the product of its members to equal a target sign. The
 * exhaustive search finds the fewest violated contexts any global
 * assignment can achieve; the evasion model mixes those minimal assignments
 * and makes each class undetectable in exactly the contexts it violates.
 */

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "objectiveqm/ensemble_engine.hpp"
#include "objectiveqm/error.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/random_stream.hpp"

namespace objectiveqm {

// ---------------------------------------------------------------------------
// CHSH by blocks
// ---------------------------------------------------------------------------

struct ChshSettings {
    std::array<std::string, 2> side_a{"A1", "A2"};
    std::array<std::string, 2> side_b{"B1", "B2"};
};

struct ChshBlock {
    std::size_t x = 0;
    std::size_t y = 0;
    std::string observable;
    std::uint64_t seed = 0;
    std::uint64_t first_id = 0;
    std::size_t size = 0;
    std::size_t coincidences = 0;
    std::optional<double> estimate;  // empty when the block had no coincidences
    double standard_error = 0.0;
    std::optional<double> analytic_conditional;
    double analytic_unconditional = 0.0;
};

struct ChshBlockReport {
    std::vector<ChshBlock> blocks;
    std::optional<double> s_estimate;  // |E11 + E12 + E21 - E22| from the blocks
    double s_standard_error = 0.0;
    std::optional<double> analytic_conditional_s;
    double analytic_unconditional_s = 0.0;
};

/// Adds "a*b" product composites for the four setting pairs when missing.
inline MicroModel with_chsh_composites(MicroModel model, const ChshSettings &settings) {
    for (const auto &a : settings.side_a) {
        for (const auto &b : settings.side_b) {
            const std::string label = a + "*" + b;
            if (model.find_observable(label) == nullptr) {
                model.add_composite(label, {a, b}, ValueCombiner::Product, 0.0);
            }
        }
    }
    return model;
}

inline ChshBlockReport chsh_blockwise(const MicroModel &input, const ChshSettings &settings, std::size_t n_per_block,
                                      std::uint64_t seed, std::size_t workers = 1) {
    require(n_per_block >= 1000, ErrorKind::InvalidInput, "CHSH blocks need at least 1000 objects");
    const MicroModel model = with_chsh_composites(input, settings);
    require_valid(model);

    ChshBlockReport report;
    std::array<std::optional<double>, 4> analytic{};
    std::array<double, 4> unconditional{};
    bool all_defined = true;
    double s = 0.0;
    double var = 0.0;
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            const std::size_t k = 2 * x + y;
            ChshBlock block;
            block.x = x;
            block.y = y;
            block.observable = settings.side_a[x] + "*" + settings.side_b[y];
            block.seed = derive_seed(seed, block.observable);
            // Disjoint id ranges: no object is shared between blocks.
            block.first_id = static_cast<std::uint64_t>(k) * n_per_block;
            block.size = n_per_block;

            const auto objects = prepare(model, n_per_block, block.seed, block.first_id, workers);
            const auto run = measure_ensemble(objects, block.observable, model, block.seed, workers);
            double sum = 0.0;
            for (const auto &r : run.records) {
                if (r.detected) {
                    ++block.coincidences;
                    sum += r.outcome;
                }
            }
            if (block.coincidences > 0) {
                const double nc = static_cast<double>(block.coincidences);
                const double e = sum / nc;
                block.estimate = e;
                block.standard_error = std::sqrt(std::max(0.0, 1.0 - e * e) / nc);
                const double sign = k == 3 ? -1.0 : 1.0;
                s += sign * e;
                var += block.standard_error * block.standard_error;
            } else {
                all_defined = false;
            }
            block.analytic_conditional = conditional_correlation(model, settings.side_a[x], settings.side_b[y]);
            block.analytic_unconditional = unconditional_correlation(model, settings.side_a[x], settings.side_b[y]);
            analytic[k] = block.analytic_conditional;
            unconditional[k] = block.analytic_unconditional;
            report.blocks.push_back(std::move(block));
        }
    }
    if (all_defined) {
        report.s_estimate = std::abs(s);
        report.s_standard_error = std::sqrt(var);
    }
    if (analytic[0] && analytic[1] && analytic[2] && analytic[3]) {
        report.analytic_conditional_s = std::abs(chsh_combination(*analytic[0], *analytic[1], *analytic[2], *analytic[3]));
    }
    report.analytic_unconditional_s =
        std::abs(chsh_combination(unconditional[0], unconditional[1], unconditional[2], unconditional[3]));
    return report;
}

// ---------------------------------------------------------------------------
// Kochen-Specker contexts
// ---------------------------------------------------------------------------

struct KSContext {
    std::vector<std::string> members;
    int target = 1;  // required product of member values
};

struct KSSystem {
    std::vector<std::string> observables;
    std::vector<KSContext> contexts;
};

/// Global ±1 value assignment.
struct Assignment {
    std::map<std::string, int> values;

    friend bool operator==(const Assignment &, const Assignment &) = default;
};

inline constexpr std::size_t kMaxKsObservables = 24;

inline void validate_system(const KSSystem &system) {
    std::set<std::string> names(system.observables.begin(), system.observables.end());
    require(names.size() == system.observables.size(), ErrorKind::InvalidInput, "duplicate observable in KS system");
    require(!system.observables.empty(), ErrorKind::InvalidInput, "KS system has no observables");
    for (const auto &c : system.contexts) {
        require(c.target == 1 || c.target == -1, ErrorKind::InvalidInput, "context targets must be +1 or -1");
        require(!c.members.empty(), ErrorKind::InvalidInput, "empty context");
        std::set<std::string> seen;
        for (const auto &m : c.members) {
            require(names.count(m) == 1, ErrorKind::InvalidInput, "context member '" + m + "' is not an observable");
            require(seen.insert(m).second, ErrorKind::InvalidInput, "context members must be distinct");
        }
    }
}

/// Composite label for a context: members joined by '*'.
inline std::string context_label(const KSContext &context) {
    std::string out;
    for (const auto &m : context.members) {
        if (!out.empty()) {
            out += "*";
        }
        out += m;
    }
    return out;
}

/// Peres-Mermin square: rows and the first two columns multiply to +1, the last column to -1.
inline KSSystem peres_mermin_system() {
    KSSystem s;
    for (int r = 1; r <= 3; ++r) {
        for (int c = 1; c <= 3; ++c) {
            s.observables.push_back("m" + std::to_string(r) + std::to_string(c));
        }
    }
    auto cell = [](int r, int c) { return "m" + std::to_string(r) + std::to_string(c); };
    for (int r = 1; r <= 3; ++r) {
        s.contexts.push_back({{cell(r, 1), cell(r, 2), cell(r, 3)}, 1});
    }
    for (int c = 1; c <= 3; ++c) {
        s.contexts.push_back({{cell(1, c), cell(2, c), cell(3, c)}, c == 3 ? -1 : 1});
    }
    return s;
}

/// Contexts whose product constraint fails under the assignment, evaluated directly from the values.
inline std::vector<std::size_t> violated_contexts(const KSSystem &system, const Assignment &assignment) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < system.contexts.size(); ++k) {
        int product = 1;
        for (const auto &m : system.contexts[k].members) {
            product *= assignment.values.at(m);
        }
        if (product != system.contexts[k].target) {
            out.push_back(k);
        }
    }
    return out;
}

struct KSSearchResult {
    std::size_t assignments_checked = 0;
    std::vector<std::uint32_t> satisfying;     // bit j set ⇔ observable j takes -1
    std::size_t min_violations = 0;
    std::vector<std::uint32_t> minimizers;     // every assignment achieving min_violations
    std::uint32_t witness = 0;                 // first minimizer in enumeration order
};

inline Assignment assignment_from_mask(const KSSystem &system, std::uint32_t mask) {
    Assignment a;
    for (std::size_t j = 0; j < system.observables.size(); ++j) {
        a.values[system.observables[j]] = (mask >> j) & 1U ? -1 : 1;
    }
    return a;
}

inline KSSearchResult ks_global_search(const KSSystem &system) {
    validate_system(system);
    const std::size_t n = system.observables.size();
    require(n <= kMaxKsObservables, ErrorKind::TooLarge,
            "brute force is capped at " + std::to_string(kMaxKsObservables) + " observables");
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < n; ++j) {
        index[system.observables[j]] = j;
    }
    std::vector<std::uint32_t> masks;
    std::vector<unsigned> odd_target;  // 1 when the target product is -1
    for (const auto &c : system.contexts) {
        std::uint32_t m = 0;
        for (const auto &member : c.members) {
            m |= 1U << index[member];
        }
        masks.push_back(m);
        odd_target.push_back(c.target == -1 ? 1U : 0U);
    }

    KSSearchResult r;
    r.min_violations = system.contexts.size() + 1;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t a = 0; a < total; ++a) {
        const auto assignment = static_cast<std::uint32_t>(a);
        std::size_t violations = 0;
        for (std::size_t k = 0; k < masks.size(); ++k) {
            // Product of ±1 values is -1 iff an odd number of members take -1.
            const unsigned parity = static_cast<unsigned>(std::popcount(assignment & masks[k])) & 1U;
            violations += parity != odd_target[k] ? 1 : 0;
        }
        if (violations == 0) {
            r.satisfying.push_back(assignment);
        }
        if (violations < r.min_violations) {
            r.min_violations = violations;
            r.minimizers.clear();
            r.witness = assignment;
        }
        if (violations == r.min_violations) {
            r.minimizers.push_back(assignment);
        }
        ++r.assignments_checked;
    }
    return r;
}

/// Model whose classes are the minimal-violation assignments, mixed uniformly. A class
/// is undetectable (detect = 0 on the first member) in each context it violates.
inline MicroModel ks_evasion_model(const KSSystem &system, const KSSearchResult &search) {
    validate_system(system);
    MicroModel model;
    model.mode = DetectionMode::Deterministic;
    for (const auto &o : system.observables) {
        model.add_elementary(o, {1.0, -1.0}, 0.0);
    }
    for (const auto &c : system.contexts) {
        model.add_composite(context_label(c), c.members, ValueCombiner::Product, 0.0);
    }
    std::vector<std::uint32_t> family = search.minimizers;
    if (search.min_violations == 0) {
        family = {search.witness};
    }
    require(!family.empty(), ErrorKind::InvalidInput, "search result has no minimizing assignments");
    const double weight = 1.0 / static_cast<double>(family.size());
    for (std::uint32_t mask : family) {
        const Assignment a = assignment_from_mask(system, mask);
        MicroClass cls;
        cls.weight = weight;
        for (const auto &[label, v] : a.values) {
            cls.responses[label] = {1.0, static_cast<double>(v)};
        }
        for (std::size_t k : violated_contexts(system, a)) {
            cls.responses[system.contexts[k].members.front()].detect = 0.0;
        }
        model.classes.push_back(std::move(cls));
    }
    require_valid(model);

    for (std::size_t k = 0; k < system.contexts.size(); ++k) {
        const std::string label = context_label(system.contexts[k]);
        double coincidence = 0.0;
        for (std::size_t i = 0; i < model.classes.size(); ++i) {
            const auto r = class_response(model, i, label);
            require(r.detect == 0.0 || r.value == system.contexts[k].target, ErrorKind::InvariantViolation,
                    "a class violating context " + label + " is detectable in it");
            coincidence += model.classes[i].weight * r.detect;
        }
        require(coincidence > 0.0, ErrorKind::InfeasibleEvasion,
                "context " + label + " has zero coincidence probability");
    }
    return model;
}

enum class ContextStatus { Verified, Violated, Unverifiable };

inline std::string_view context_status_name(ContextStatus s) {
    switch (s) {
        case ContextStatus::Verified:
            return "verified";
        case ContextStatus::Violated:
            return "violated";
        case ContextStatus::Unverifiable:
            return "unverifiable";
    }
    return "unknown";
}

struct ContextCheck {
    std::string label;
    int target = 1;
    std::size_t runs = 0;
    std::size_t coincidences = 0;
    std::size_t violations = 0;  // coincident runs whose product differs from the target
    double coincidence_rate = 0.0;
    double analytic_coincidence_rate = 0.0;
    ContextStatus status = ContextStatus::Unverifiable;
};

/// Simulated joint measurement of every context; checks the product relation on every coincident run.
inline std::vector<ContextCheck> ks_context_check(const MicroModel &input, const KSSystem &system, std::size_t n,
                                                  std::uint64_t seed, std::size_t workers = 1) {
    validate_system(system);
    require(n >= 1, ErrorKind::InvalidInput, "context checks need at least one run");
    MicroModel model = input;
    for (const auto &c : system.contexts) {
        if (model.find_observable(context_label(c)) == nullptr) {
            model.add_composite(context_label(c), c.members, ValueCombiner::Product, 0.0);
        }
    }
    require_valid(model);
    std::vector<ContextCheck> out;
    for (std::size_t k = 0; k < system.contexts.size(); ++k) {
        ContextCheck check;
        check.label = context_label(system.contexts[k]);
        check.target = system.contexts[k].target;
        check.runs = n;
        const std::uint64_t block_seed = derive_seed(seed, check.label);
        const auto objects = prepare(model, n, block_seed, static_cast<std::uint64_t>(k) * n, workers);
        const auto run = measure_ensemble(objects, check.label, model, block_seed, workers);
        for (const auto &r : run.records) {
            if (!r.detected) {
                continue;
            }
            ++check.coincidences;
            if (r.outcome != static_cast<double>(check.target)) {
                ++check.violations;
            }
        }
        check.coincidence_rate = static_cast<double>(check.coincidences) / static_cast<double>(n);
        for (std::size_t i = 0; i < model.classes.size(); ++i) {
            check.analytic_coincidence_rate += model.classes[i].weight * class_response(model, i, check.label).detect;
        }
        if (check.coincidences == 0) {
            check.status = ContextStatus::Unverifiable;
        } else {
            check.status = check.violations == 0 ? ContextStatus::Verified : ContextStatus::Violated;
        }
        out.push_back(std::move(check));
    }
    return out;
}

/// Negative control: makes class `index` fully detectable again.
inline MicroModel restore_detection(MicroModel model, std::size_t index) {
    require(index < model.classes.size(), ErrorKind::NotFound, "unknown class index");
    for (auto &[label, r] : model.classes[index].responses) {
        r.detect = 1.0;
    }
    return model;
}

}  // namespace objectiveqm
