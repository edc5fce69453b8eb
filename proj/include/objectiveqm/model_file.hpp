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
 * @file    model_file.hpp
 * @brief   JSON encoding of states, observables, micro-models and KS systems,
 *          plus the bundled presets.
 *
 * Model document (format_version 1):
 *
 *   {
 *     "format_version": 1,
 *     "kind": "objectiveqm.model",
 *     "mode": "deterministic" | "stochastic",
 *     "observables": [
 *       {"label": "A1", "spectrum": [1, -1], "a0": 0},
 *       {"label": "A1*B1", "constituents": ["A1", "B1"], "combiner": "product", "a0": 0}
 *     ],
 *     "classes": [
 *       {"weight": 0.5, "responses": {"A1": {"detect": 1, "value": 1}, ...}}
 *     ],
 *     "target": <state>,                      (optional)
 *     "quantum_observables": [<observable>]   (optional)
 *   }
 *
 * A state is {"preset": "singlet"}, {"amplitudes": [...]}, {"density": [...]},
 * {"mixture": [{"weight": w, "state": <state>}, ...]} or
 * {"product": [<state>, <state>, ...]}. Complex numbers are [re, im] pairs or
 * plain reals; matrices are row-major flat lists.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "objectiveqm/error.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/model_synthesis.hpp"
#include "objectiveqm/nogo_experiments.hpp"
#include "objectiveqm/quantum_oracle.hpp"

namespace objectiveqm {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace io {

inline const json &field(const json &doc, const std::string &key) {
    require(doc.is_object(), ErrorKind::InvalidInput, "expected an object while looking for '" + key + "'");
    auto it = doc.find(key);
    require(it != doc.end(), ErrorKind::InvalidInput, "missing field '" + key + "'");
    return *it;
}

inline double number(const json &v, const std::string &what) {
    require(v.is_number(), ErrorKind::InvalidInput, "'" + what + "' must be a number");
    return v.get<double>();
}

inline std::string text(const json &v, const std::string &what) {
    require(v.is_string(), ErrorKind::InvalidInput, "'" + what + "' must be a string");
    return v.get<std::string>();
}

inline std::vector<double> number_list(const json &v, const std::string &what) {
    require(v.is_array(), ErrorKind::InvalidInput, "'" + what + "' must be an array");
    std::vector<double> out;
    for (const auto &x : v) {
        out.push_back(number(x, what));
    }
    return out;
}

inline std::vector<std::string> text_list(const json &v, const std::string &what) {
    require(v.is_array(), ErrorKind::InvalidInput, "'" + what + "' must be an array");
    std::vector<std::string> out;
    for (const auto &x : v) {
        out.push_back(text(x, what));
    }
    return out;
}

inline complex parse_complex(const json &v) {
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(), ErrorKind::InvalidInput,
            "complex numbers are written as [re, im]");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline json complex_to_json(complex z) {
    return json::array({z.real(), z.imag()});
}

inline std::size_t integer_sqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

inline ComplexMatrix parse_matrix(const json &v) {
    require(v.is_array(), ErrorKind::InvalidInput, "matrices are flat row-major arrays");
    const std::size_t dim = integer_sqrt(v.size());
    require(dim > 0, ErrorKind::InvalidInput, "matrix entry count is not a square");
    std::vector<complex> entries;
    for (const auto &z : v) {
        entries.push_back(parse_complex(z));
    }
    return ComplexMatrix(dim, std::move(entries));
}

inline json matrix_to_json(const ComplexMatrix &m) {
    json out = json::array();
    for (const auto &z : m.entries()) {
        out.push_back(complex_to_json(z));
    }
    return out;
}

}  // namespace io

// ---------------------------------------------------------------------------
// States and observables
// ---------------------------------------------------------------------------

inline DensityState parse_state(const json &doc) {
    require(doc.is_object(), ErrorKind::InvalidInput, "a state must be an object");
    if (doc.contains("preset")) {
        const auto name = io::text(doc["preset"], "preset");
        require(name == "singlet", ErrorKind::InvalidInput, "unknown state preset '" + name + "'");
        return singlet_state();
    }
    if (doc.contains("amplitudes")) {
        std::vector<complex> amps;
        require(doc["amplitudes"].is_array(), ErrorKind::InvalidInput, "'amplitudes' must be an array");
        for (const auto &z : doc["amplitudes"]) {
            amps.push_back(io::parse_complex(z));
        }
        return make_pure(amps);
    }
    if (doc.contains("density")) {
        return DensityState::from_matrix(io::parse_matrix(doc["density"]));
    }
    if (doc.contains("mixture")) {
        std::vector<MixtureComponent> parts;
        require(doc["mixture"].is_array(), ErrorKind::InvalidInput, "'mixture' must be an array");
        for (const auto &c : doc["mixture"]) {
            parts.push_back({io::number(io::field(c, "weight"), "weight"), parse_state(io::field(c, "state"))});
        }
        return mix(parts);
    }
    if (doc.contains("product")) {
        const auto &factors = doc["product"];
        require(factors.is_array() && !factors.empty(), ErrorKind::InvalidInput, "'product' must be a nonempty array");
        DensityState out = parse_state(factors[0]);
        for (std::size_t k = 1; k < factors.size(); ++k) {
            out = product_state(out, parse_state(factors[k]));
        }
        return out;
    }
    fail(ErrorKind::InvalidInput, "a state needs one of preset, amplitudes, density, mixture, product");
}

inline json state_to_json(const DensityState &rho) {
    return json{{"density", io::matrix_to_json(rho.matrix())}};
}

inline json spectral_to_json(const SpectralObservable &obs) {
    json branches = json::array();
    for (const auto &b : obs.branches()) {
        branches.push_back({{"eigenvalue", b.eigenvalue}, {"projector", io::matrix_to_json(b.projector)}});
    }
    return json{{"label", obs.label()}, {"branches", branches}};
}

/// Quantum observables from config. Entries may refer to earlier entries by label
/// ("tensor"), so the list is parsed in order.
inline std::vector<SpectralObservable> parse_spectral_observables(const json &doc);

namespace detail {

inline std::vector<SpectralObservable> chsh_optimal_observables() {
    std::vector<SpectralObservable> local;
    for (std::size_t x = 0; x < 2; ++x) {
        local.push_back(spin_observable(planar_direction(kChshAnglesA[x]), kChshSideA[x]));
    }
    for (std::size_t y = 0; y < 2; ++y) {
        local.push_back(spin_observable(planar_direction(kChshAnglesB[y]), kChshSideB[y]));
    }
    const auto id = identity_observable(2);
    std::vector<SpectralObservable> out;
    for (std::size_t x = 0; x < 2; ++x) {
        out.push_back(tensor_product_observable(local[x], id, [](double a, double) { return a; }, kChshSideA[x]));
    }
    for (std::size_t y = 0; y < 2; ++y) {
        out.push_back(tensor_product_observable(id, local[2 + y], [](double, double b) { return b; }, kChshSideB[y]));
    }
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            out.push_back(tensor_product_observable(local[x], local[2 + y], combine_product, chsh_pair_label(x, y)));
        }
    }
    return out;
}

}  // namespace detail

inline std::vector<SpectralObservable> parse_spectral_observables(const json &doc) {
    if (doc.is_object()) {
        const auto name = io::text(io::field(doc, "preset"), "preset");
        require(name == "chsh-optimal", ErrorKind::InvalidInput, "unknown observable preset '" + name + "'");
        return detail::chsh_optimal_observables();
    }
    require(doc.is_array(), ErrorKind::InvalidInput, "observables must be an array or a preset object");
    std::vector<SpectralObservable> out;
    auto lookup = [&out](const std::string &label) -> const SpectralObservable & {
        for (const auto &o : out) {
            if (o.label() == label) {
                return o;
            }
        }
        fail(ErrorKind::InvalidInput, "observable '" + label + "' is not defined before use");
    };
    for (const auto &entry : doc) {
        const auto label = io::text(io::field(entry, "label"), "label");
        if (entry.contains("direction")) {
            const auto d = io::number_list(entry["direction"], "direction");
            require(d.size() == 3, ErrorKind::InvalidInput, "'direction' needs three components");
            out.push_back(spin_observable({d[0], d[1], d[2]}, label));
        } else if (entry.contains("angle")) {
            out.push_back(spin_observable(planar_direction(io::number(entry["angle"], "angle")), label));
        } else if (entry.contains("tensor")) {
            const auto parts = io::text_list(entry["tensor"], "tensor");
            require(parts.size() == 2, ErrorKind::InvalidInput, "'tensor' takes exactly two labels");
            const std::string combiner = entry.value("combiner", std::string("product"));
            const auto &lhs = lookup(parts[0]);
            const auto &rhs = lookup(parts[1]);
            if (combiner == "product") {
                out.push_back(tensor_product_observable(lhs, rhs, combine_product, label));
            } else if (combiner == "sum") {
                out.push_back(tensor_product_observable(lhs, rhs, combine_sum, label));
            } else if (combiner == "left") {
                out.push_back(tensor_product_observable(lhs, rhs, [](double a, double) { return a; }, label));
            } else if (combiner == "right") {
                out.push_back(tensor_product_observable(lhs, rhs, [](double, double b) { return b; }, label));
            } else {
                fail(ErrorKind::InvalidInput, "unknown combiner '" + combiner + "'");
            }
        } else if (entry.contains("identity")) {
            const auto dim = static_cast<std::size_t>(io::number(entry["identity"], "identity"));
            out.push_back(identity_observable(dim, label));
        } else if (entry.contains("branches")) {
            std::vector<SpectralBranch> branches;
            for (const auto &b : entry["branches"]) {
                branches.push_back(
                    {io::number(io::field(b, "eigenvalue"), "eigenvalue"), io::parse_matrix(io::field(b, "projector"))});
            }
            out.emplace_back(label, std::move(branches));
        } else {
            fail(ErrorKind::InvalidInput, "observable '" + label + "' needs direction, angle, tensor, identity or branches");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Micro-models
// ---------------------------------------------------------------------------

inline std::string_view combiner_name(ValueCombiner c) {
    return c == ValueCombiner::Product ? "product" : "sum";
}

inline json model_to_json(const MicroModel &model) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "objectiveqm.model";
    doc["mode"] = model.mode == DetectionMode::Deterministic ? "deterministic" : "stochastic";
    json observables = json::array();
    for (const auto &o : model.observables) {
        json entry{{"label", o.label}, {"a0", o.a0}};
        if (o.elementary()) {
            entry["spectrum"] = o.spectrum;
        } else {
            entry["constituents"] = o.constituents;
            entry["combiner"] = combiner_name(o.combiner);
        }
        observables.push_back(std::move(entry));
    }
    doc["observables"] = std::move(observables);
    json classes = json::array();
    for (const auto &c : model.classes) {
        json responses = json::object();
        for (const auto &[label, r] : c.responses) {
            responses[label] = {{"detect", r.detect}, {"value", r.value}};
        }
        classes.push_back({{"weight", c.weight}, {"responses", std::move(responses)}});
    }
    doc["classes"] = std::move(classes);
    if (model.target) {
        doc["target"] = state_to_json(*model.target);
    }
    if (!model.quantum_observables.empty()) {
        json q = json::array();
        for (const auto &o : model.quantum_observables) {
            q.push_back(spectral_to_json(o));
        }
        doc["quantum_observables"] = std::move(q);
    }
    return doc;
}

inline void check_format_version(const json &doc) {
    require(doc.is_object(), ErrorKind::InvalidInput, "document must be a JSON object");
    const int version = static_cast<int>(io::number(io::field(doc, "format_version"), "format_version"));
    require(version == kFormatVersion, ErrorKind::InvalidInput,
            "unsupported format_version " + std::to_string(version));
}

/// Parses and validates a model document.
inline MicroModel model_from_json(const json &doc) {
    check_format_version(doc);
    MicroModel model;
    const auto mode = io::text(io::field(doc, "mode"), "mode");
    require(mode == "deterministic" || mode == "stochastic", ErrorKind::InvalidInput, "unknown mode '" + mode + "'");
    model.mode = mode == "deterministic" ? DetectionMode::Deterministic : DetectionMode::Stochastic;
    const auto &observables = io::field(doc, "observables");
    require(observables.is_array(), ErrorKind::InvalidInput, "'observables' must be an array");
    for (const auto &o : observables) {
        const auto label = io::text(io::field(o, "label"), "label");
        const double a0 = io::number(io::field(o, "a0"), "a0");
        if (o.contains("constituents")) {
            const auto combiner = o.value("combiner", std::string("product"));
            require(combiner == "product" || combiner == "sum", ErrorKind::InvalidInput,
                    "unknown combiner '" + combiner + "'");
            model.add_composite(label, io::text_list(o["constituents"], "constituents"),
                                combiner == "product" ? ValueCombiner::Product : ValueCombiner::Sum, a0);
        } else {
            model.add_elementary(label, io::number_list(io::field(o, "spectrum"), "spectrum"), a0);
        }
    }
    const auto &classes = io::field(doc, "classes");
    require(classes.is_array(), ErrorKind::InvalidInput, "'classes' must be an array");
    for (const auto &c : classes) {
        MicroClass cls;
        cls.weight = io::number(io::field(c, "weight"), "weight");
        const auto &responses = io::field(c, "responses");
        require(responses.is_object(), ErrorKind::InvalidInput, "'responses' must be an object");
        for (const auto &[label, r] : responses.items()) {
            cls.responses[label] = {io::number(io::field(r, "detect"), "detect"),
                                    io::number(io::field(r, "value"), "value")};
        }
        model.classes.push_back(std::move(cls));
    }
    if (doc.contains("target")) {
        model.target = parse_state(doc["target"]);
    }
    if (doc.contains("quantum_observables")) {
        model.quantum_observables = parse_spectral_observables(doc["quantum_observables"]);
    }
    require_valid(model);
    return model;
}

inline MacroProperty parse_property(const json &doc) {
    MacroProperty f;
    f.observable = io::text(io::field(doc, "observable"), "observable");
    f.delta = OutcomeSet(io::number_list(io::field(doc, "delta"), "delta"), doc.value("contains_a0", false));
    return f;
}

inline json property_to_json(const MacroProperty &f) {
    return json{{"observable", f.observable}, {"delta", f.delta.members}, {"contains_a0", f.delta.contains_a0}};
}

// ---------------------------------------------------------------------------
// CHSH targets and KS systems
// ---------------------------------------------------------------------------

/// {"preset": "chsh-optimal"} or {"correlations": [[E11, E12], [E21, E22]]}; eta is supplied separately.
inline std::array<std::array<double, 2>, 2> parse_correlations(const json &doc) {
    if (doc.contains("preset")) {
        const auto name = io::text(doc["preset"], "preset");
        require(name == "chsh-optimal", ErrorKind::InvalidInput, "unknown target preset '" + name + "'");
        return chsh_optimal_target(1.0).correlations;
    }
    const auto &rows = io::field(doc, "correlations");
    require(rows.is_array() && rows.size() == 2, ErrorKind::InvalidInput, "'correlations' must be a 2x2 array");
    std::array<std::array<double, 2>, 2> out{};
    for (std::size_t x = 0; x < 2; ++x) {
        const auto row = io::number_list(rows[x], "correlations");
        require(row.size() == 2, ErrorKind::InvalidInput, "'correlations' must be a 2x2 array");
        out[x] = {row[0], row[1]};
    }
    return out;
}

inline KSSystem parse_ks_system(const json &doc) {
    if (doc.contains("preset")) {
        const auto name = io::text(doc["preset"], "preset");
        require(name == "peres-mermin", ErrorKind::InvalidInput, "unknown KS preset '" + name + "'");
        return peres_mermin_system();
    }
    KSSystem s;
    s.observables = io::text_list(io::field(doc, "observables"), "observables");
    for (const auto &c : io::field(doc, "contexts")) {
        const double target = io::number(io::field(c, "target"), "target");
        s.contexts.push_back({io::text_list(io::field(c, "members"), "members"), static_cast<int>(target)});
        require(target == 1.0 || target == -1.0, ErrorKind::InvalidInput, "context targets must be +1 or -1");
    }
    validate_system(s);
    return s;
}

inline json ks_system_to_json(const KSSystem &s) {
    json contexts = json::array();
    for (const auto &c : s.contexts) {
        contexts.push_back({{"members", c.members}, {"target", c.target}});
    }
    return json{{"observables", s.observables}, {"contexts", contexts}};
}

inline json assignment_to_json(const Assignment &a) {
    json out = json::object();
    for (const auto &[label, v] : a.values) {
        out[label] = v;
    }
    return out;
}

}  // namespace objectiveqm
