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

#include "objectiveqm/micro_model.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "test_support.hpp"

using namespace objectiveqm;
using objectiveqm::testing::Rng;

namespace {

/// One dichotomic observable "A"; each class is (weight, detect, value).
MicroModel single_observable_model(std::vector<std::array<double, 3>> classes) {
    MicroModel m;
    m.add_elementary("A", {1.0, -1.0}, 0.0);
    for (const auto &[w, d, v] : classes) {
        MicroClass c;
        c.weight = w;
        c.responses["A"] = {d, v};
        m.classes.push_back(c);
    }
    return m;
}

/// Two-side registry A1, A2 | B1, B2; responses are (dA1, vA1, dA2, vA2, dB1, vB1, dB2, vB2).
MicroModel bipartite_model(const std::vector<std::pair<double, std::array<double, 8>>> &classes) {
    MicroModel m;
    for (const char *l : {"A1", "A2", "B1", "B2"}) {
        m.add_elementary(l, {1.0, -1.0}, 0.0);
    }
    for (const auto &[w, r] : classes) {
        MicroClass c;
        c.weight = w;
        c.responses["A1"] = {r[0], r[1]};
        c.responses["A2"] = {r[2], r[3]};
        c.responses["B1"] = {r[4], r[5]};
        c.responses["B2"] = {r[6], r[7]};
        m.classes.push_back(c);
    }
    return m;
}

ErrorKind kind_of(const auto &fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an objectiveqm::Error";
    return ErrorKind::InvariantViolation;
}

}  // namespace

TEST(class_breakdown, detected_and_possessed) {
    const auto m = single_observable_model({{1.0, 1.0, 1.0}});
    const auto b = class_breakdown(m, 0, {"A", OutcomeSet({1.0})});
    EXPECT_EQ(b.total, 1.0);
    EXPECT_EQ(b.detect, 1.0);
    EXPECT_EQ(b.conditional, 1.0);
}

TEST(class_breakdown, detected_but_not_possessed) {
    const auto m = single_observable_model({{1.0, 0.6, 1.0}});
    const auto b = class_breakdown(m, 0, {"A", OutcomeSet({-1.0})});
    EXPECT_EQ(b.total, 0.0);
    EXPECT_EQ(b.detect, 0.6);
    EXPECT_EQ(b.conditional, 0.0);
}

TEST(class_breakdown, no_registration_outcome_in_delta) {
    const auto m = single_observable_model({{1.0, 0.6, 1.0}});
    const auto b = class_breakdown(m, 0, {"A", OutcomeSet({-1.0}, true)});
    // Undetected branch contributes (1 - 0.6); the detected branch yields +1 ∉ Δ.
    EXPECT_NEAR(b.total, 0.4, 1e-15);
    EXPECT_EQ(b.detect, 0.6);
    EXPECT_EQ(b.conditional, 0.0);
}

TEST(class_breakdown, undetectable_class_has_no_conditional) {
    const auto m = single_observable_model({{1.0, 0.0, 1.0}});
    const auto b = class_breakdown(m, 0, {"A", OutcomeSet({1.0})});
    EXPECT_EQ(b.total, 0.0);
    EXPECT_EQ(b.detect, 0.0);
    EXPECT_FALSE(b.conditional.has_value());
}

TEST(class_breakdown, unknown_class_or_observable) {
    const auto m = single_observable_model({{1.0, 1.0, 1.0}});
    EXPECT_EQ(kind_of([&] { class_breakdown(m, 1, {"A", OutcomeSet({1.0})}); }), ErrorKind::NotFound);
    EXPECT_EQ(kind_of([&] { class_breakdown(m, 0, {"Z", OutcomeSet({1.0})}); }), ErrorKind::NotFound);
}

TEST(class_breakdown, composite_multiplies_detection) {
    MicroModel m;
    m.add_elementary("A", {1.0, -1.0});
    m.add_elementary("B", {1.0, -1.0});
    m.add_composite("A*B", {"A", "B"}, ValueCombiner::Product);
    m.add_composite("A+B", {"A", "B"}, ValueCombiner::Sum, 99.0);
    MicroClass c;
    c.weight = 1.0;
    c.responses["A"] = {0.5, -1.0};
    c.responses["B"] = {0.8, 1.0};
    m.classes.push_back(c);
    EXPECT_EQ(m.observable("A*B").spectrum, (std::vector<double>{-1.0, 1.0}));
    EXPECT_EQ(m.observable("A+B").spectrum, (std::vector<double>{-2.0, 0.0, 2.0}));
    const auto prod = class_breakdown(m, 0, {"A*B", OutcomeSet({-1.0})});
    EXPECT_DOUBLE_EQ(prod.detect, 0.4);
    EXPECT_EQ(prod.conditional, 1.0);
    const auto sum = class_breakdown(m, 0, {"A+B", OutcomeSet({0.0})});
    EXPECT_EQ(sum.conditional, 1.0);
    EXPECT_TRUE(validate_model(m).empty());
}

TEST(state_breakdown, single_class_matches_class_breakdown) {
    const auto m = single_observable_model({{1.0, 1.0, -1.0}});
    const MacroProperty f{"A", OutcomeSet({-1.0})};
    const auto s = state_breakdown(m, f);
    const auto c = class_breakdown(m, 0, f);
    EXPECT_EQ(s.total, c.total);
    EXPECT_EQ(s.detect, c.detect);
    EXPECT_EQ(s.conditional, c.conditional);
}

TEST(state_breakdown, even_split_one_possessing_class) {
    const auto m = single_observable_model({{0.5, 1.0, 1.0}, {0.5, 1.0, -1.0}});
    const auto s = state_breakdown(m, {"A", OutcomeSet({1.0})});
    EXPECT_EQ(s.total, 0.5);
    EXPECT_EQ(s.detect, 1.0);
    EXPECT_EQ(s.conditional, 0.5);
}

TEST(state_breakdown, unequal_detection) {
    const auto m = single_observable_model({{0.5, 0.8, 1.0}, {0.5, 0.4, -1.0}});
    const auto s = state_breakdown(m, {"A", OutcomeSet({1.0})});
    EXPECT_NEAR(s.total, 0.4, 1e-15);
    EXPECT_NEAR(s.detect, 0.6, 1e-15);
    ASSERT_TRUE(s.conditional.has_value());
    EXPECT_NEAR(*s.conditional, 2.0 / 3.0, 1e-15);
}

TEST(state_breakdown, nothing_detected_is_undefined) {
    const auto m = single_observable_model({{0.3, 0.0, 1.0}, {0.7, 0.0, -1.0}});
    const auto s = state_breakdown(m, {"A", OutcomeSet({1.0})});
    EXPECT_EQ(s.detect, 0.0);
    EXPECT_FALSE(s.conditional.has_value());
    EXPECT_EQ(state_breakdown(m, {"A", OutcomeSet({}, true)}).total, 1.0);
}

TEST(conditional_correlation, perfectly_correlated) {
    const auto m = bipartite_model({{0.4, {1, 1, 1, -1, 1, 1, 1, -1}}, {0.6, {1, -1, 1, 1, 1, -1, 1, 1}}});
    EXPECT_EQ(conditional_correlation(m, "A1", "B1"), 1.0);
    EXPECT_EQ(conditional_correlation(m, "A2", "B2"), 1.0);
    EXPECT_DOUBLE_EQ(*conditional_correlation(m, "A1", "B2"), 0.4 * 1.0 * -1.0 + 0.6 * -1.0 * 1.0);
}

TEST(conditional_correlation, full_detection_equals_unconditional) {
    Rng rng(17);
    std::uniform_real_distribution<double> u;
    for (int k = 0; k < 100; ++k) {
        std::vector<std::pair<double, std::array<double, 8>>> classes;
        for (int i = 0; i < 4; ++i) {
            std::array<double, 8> r{};
            for (int j = 0; j < 8; j += 2) {
                r[j] = 1.0;
                r[j + 1] = u(rng) < 0.5 ? 1.0 : -1.0;
            }
            classes.push_back({0.25, r});
        }
        const auto m = bipartite_model(classes);
        EXPECT_NEAR(*conditional_correlation(m, "A1", "B2"), unconditional_correlation(m, "A1", "B2"), 1e-15);
    }
}

TEST(conditional_correlation, mixed_detection_brute_force) {
    const auto m = bipartite_model({{0.2, {0.9, 1, 1, 1, 0.5, 1, 1, 1}},
                                    {0.3, {0.3, -1, 1, 1, 0.7, 1, 1, 1}},
                                    {0.5, {0.6, 1, 1, 1, 0.2, -1, 1, 1}}});
    // Σ p dA dB vA vB / Σ p dA dB by hand.
    const double num = 0.2 * 0.9 * 0.5 - 0.3 * 0.3 * 0.7 - 0.5 * 0.6 * 0.2;
    const double den = 0.2 * 0.9 * 0.5 + 0.3 * 0.3 * 0.7 + 0.5 * 0.6 * 0.2;
    EXPECT_NEAR(*conditional_correlation(m, "A1", "B1"), num / den, 1e-15);
    EXPECT_NEAR(unconditional_correlation(m, "A1", "B1"), num, 1e-15);
}

TEST(conditional_correlation, no_coincidences_is_undefined) {
    const auto m = bipartite_model({{1.0, {0, 1, 1, 1, 1, 1, 1, 1}}});
    EXPECT_FALSE(conditional_correlation(m, "A1", "B1").has_value());
    EXPECT_EQ(unconditional_correlation(m, "A1", "B1"), 0.0);
}

TEST(conditional_correlation, rejects_non_dichotomic_and_composite) {
    MicroModel m;
    m.add_elementary("A", {1.0, -1.0});
    m.add_elementary("C", {0.0, 1.0, 2.0}, -1.0);
    m.add_composite("A*A", {"A", "A"}, ValueCombiner::Product);
    m.classes.push_back({1.0, {{"A", {1.0, 1.0}}, {"C", {1.0, 2.0}}}});
    EXPECT_EQ(kind_of([&] { conditional_correlation(m, "A", "C"); }), ErrorKind::DomainError);
    EXPECT_EQ(kind_of([&] { unconditional_correlation(m, "A*A", "A"); }), ErrorKind::DomainError);
}

TEST(unconditional_correlation, all_undetected_is_zero) {
    const auto m = bipartite_model({{0.5, {0, 1, 0, 1, 0, 1, 0, 1}}, {0.5, {0, -1, 0, 1, 0, 1, 0, -1}}});
    EXPECT_EQ(unconditional_correlation(m, "A2", "B2"), 0.0);
}

TEST(unconditional_correlation, one_sided_efficiency_scales_conditional) {
    const double eta = 0.7;
    const auto m = bipartite_model({{0.25, {eta, 1, 1, 1, 1, 1, 1, 1}},
                                    {0.25, {eta, -1, 1, 1, 1, -1, 1, 1}},
                                    {0.5, {eta, 1, 1, 1, 1, -1, 1, 1}}});
    EXPECT_NEAR(unconditional_correlation(m, "A1", "B1"), eta * *conditional_correlation(m, "A1", "B1"), 1e-15);
}

TEST(quantum_consistency, matches_born_rule_and_detects_perturbation) {
    MicroModel m = single_observable_model({{0.75, 1.0, 1.0}, {0.25, 0.5, -1.0}});
    m.target = DensityState::from_matrix(ComplexMatrix::diagonal(std::vector<double>{0.75, 0.25}));
    m.quantum_observables.push_back(spin_observable({0.0, 0.0, 1.0}, "A"));
    // Conditional P(+1) = 0.75 / (0.75 + 0.125) ≠ 0.75.
    const auto bad = quantum_consistency(m, {{"A", OutcomeSet({1.0})}});
    EXPECT_NEAR(bad.max_deviation, std::abs(0.75 / 0.875 - 0.75), 1e-15);
    EXPECT_FALSE(bad.passes(1e-12));

    m.classes[1].responses["A"].detect = 1.0;
    const auto good = quantum_consistency(m, {{"A", OutcomeSet({1.0})}, {"A", OutcomeSet({-1.0})}});
    EXPECT_TRUE(good.passes(1e-12));
    EXPECT_EQ(good.deviations.size(), 2u);

    m.classes[0].weight = 0.74;
    m.classes[1].weight = 0.26;
    const auto perturbed = quantum_consistency(m, {{"A", OutcomeSet({1.0})}});
    EXPECT_NEAR(perturbed.max_deviation, 0.01, 1e-12);

    EXPECT_EQ(quantum_consistency(m, {}).max_deviation, 0.0);
}

TEST(quantum_consistency, input_errors) {
    MicroModel m = single_observable_model({{1.0, 1.0, 1.0}});
    EXPECT_EQ(kind_of([&] { quantum_consistency(m, {}); }), ErrorKind::InvalidInput);
    m.target = make_pure({1.0, 0.0});
    m.quantum_observables.push_back(spin_observable({0.0, 0.0, 1.0}, "A"));
    EXPECT_EQ(kind_of([&] { quantum_consistency(m, {{"A", OutcomeSet({1.0}, true)}}); }), ErrorKind::InvalidInput);
}

TEST(validate_model, reports_each_violation) {
    auto m = single_observable_model({{0.5, 1.0, 1.0}, {0.4, 1.0, -1.0}});
    EXPECT_FALSE(validate_model(m).empty());
    m.classes[1].weight = 0.5;
    EXPECT_TRUE(validate_model(m).empty());

    auto outside = m;
    outside.classes[0].responses["A"].value = 3.0;
    EXPECT_EQ(validate_model(outside).size(), 1u);

    auto fractional = m;
    fractional.mode = DetectionMode::Deterministic;
    fractional.classes[0].responses["A"].detect = 0.5;
    EXPECT_EQ(validate_model(fractional).size(), 1u);

    auto a0_in_spectrum = m;
    a0_in_spectrum.observables[0].a0 = 1.0;
    EXPECT_EQ(validate_model(a0_in_spectrum).size(), 1u);

    auto missing = m;
    missing.add_elementary("B", {1.0, -1.0});
    EXPECT_EQ(validate_model(missing).size(), 2u);

    auto zero_weight = m;
    zero_weight.classes.push_back({0.0, {{"A", {1.0, 1.0}}}});
    EXPECT_EQ(validate_model(zero_weight).size(), 1u);
    EXPECT_EQ(kind_of([&] { require_valid(zero_weight); }), ErrorKind::InvalidInput);
}

TEST(micro_model_properties, factorization_identity_over_random_models) {
    Rng rng(1234);
    std::size_t checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto m = objectiveqm::testing::random_model(rng, {.deterministic = k % 3 == 0});
        ASSERT_TRUE(validate_model(m).empty());
        for (int q = 0; q < 4; ++q) {
            const auto f = objectiveqm::testing::random_property(m, rng, 0.3);
            const auto b = state_breakdown(m, f);
            if (!f.delta.contains_a0) {
                EXPECT_LE(b.total, b.detect + 1e-15);
                if (b.conditional) {
                    EXPECT_LE(std::abs(b.total - b.detect * *b.conditional), 1e-15 * std::max(1.0, b.total));
                    ++checked;
                }
            }
            for (std::size_t i = 0; i < m.classes.size(); ++i) {
                const auto c = class_breakdown(m, i, f);
                if (c.conditional && !f.delta.contains_a0) {
                    EXPECT_EQ(c.total, c.detect * *c.conditional);
                }
            }
        }
    }
    EXPECT_GT(checked, 1000u);
}

TEST(micro_model_properties, merging_identical_classes_is_neutral) {
    Rng rng(77);
    for (int k = 0; k < 200; ++k) {
        const auto m = objectiveqm::testing::random_model(rng);
        auto split = m;
        const auto half = split.classes[0].weight / 2.0;
        split.classes[0].weight = half;
        split.classes.push_back(split.classes[0]);
        const auto f = objectiveqm::testing::random_property(m, rng, 0.3);
        const auto a = state_breakdown(m, f);
        const auto b = state_breakdown(split, f);
        EXPECT_NEAR(a.total, b.total, 1e-15);
        EXPECT_NEAR(a.detect, b.detect, 1e-15);
        ASSERT_EQ(a.conditional.has_value(), b.conditional.has_value());
        if (a.conditional) {
            EXPECT_NEAR(*a.conditional, *b.conditional, 1e-15);
        }
    }
}

TEST(micro_model_properties, elementary_value_is_context_independent) {
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        auto m = objectiveqm::testing::random_model(rng);
        m.add_composite("A*C", {"A", "C"}, ValueCombiner::Sum, -9.0);
        for (std::size_t i = 0; i < m.classes.size(); ++i) {
            const auto vab = class_response(m, i, "A*B");
            const auto vac = class_response(m, i, "A*C");
            const double vb = m.classes[i].responses["B"].value;
            const double vc = m.classes[i].responses["C"].value;
            // Recover A's contribution from each composite: both must be the stored value.
            EXPECT_EQ(vab.value / vb, m.classes[i].responses["A"].value);
            EXPECT_EQ(vac.value - vc, m.classes[i].responses["A"].value);
        }
    }
}

TEST(micro_model_properties, local_models_obey_chsh_bound) {
    Rng rng(2718);
    std::uniform_real_distribution<double> u;
    for (int k = 0; k < 1000; ++k) {
        std::vector<std::pair<double, std::array<double, 8>>> classes;
        const int count = 1 + static_cast<int>(u(rng) * 6);
        for (int i = 0; i < count; ++i) {
            std::array<double, 8> r{};
            for (int j = 0; j < 8; j += 2) {
                r[j] = u(rng) < 0.2 ? 1.0 : u(rng);
                r[j + 1] = u(rng) < 0.5 ? 1.0 : -1.0;
            }
            classes.push_back({1.0 / count, r});
        }
        const auto m = bipartite_model(classes);
        const double s = chsh_combination(
            unconditional_correlation(m, "A1", "B1"), unconditional_correlation(m, "A1", "B2"),
            unconditional_correlation(m, "A2", "B1"), unconditional_correlation(m, "A2", "B2"));
        EXPECT_LE(std::abs(s), 2.0 + 1e-12);
    }
}
