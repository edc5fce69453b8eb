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
 * @file    commands.hpp
 * @brief   The six CLI commands, run manifests and manifest replay.
 *
 * Every command maps a JSON config to a set of named output files held in
 * memory; `execute` writes them plus manifest.json (command, effective
 * config, seed, version, timestamp, SHA-256 of each output). Replaying a
 * manifest reruns the command from the recorded config and compares digests.
 *
 * Exit codes: 0 success (including "infeasible" results), 2 configuration
 * error, 3 internal invariant violation.
 */

#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "objectiveqm/ensemble_engine.hpp"
#include "objectiveqm/error.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/model_file.hpp"
#include "objectiveqm/model_synthesis.hpp"
#include "objectiveqm/nogo_experiments.hpp"

#ifndef OBJECTIVEQM_VERSION
#define OBJECTIVEQM_VERSION "0.0.0"
#endif

namespace objectiveqm {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInvariant = 3 };

inline const std::vector<std::string> &command_names() {
    static const std::vector<std::string> names = {"born", "simulate", "synthesize", "chsh", "ks", "threshold"};
    return names;
}

struct CommandOutput {
    std::map<std::string, std::string> files;  // file name → contents
    int exit_code = kExitOk;
    std::string message;
};

/// Shortest round-trip decimal, always with a decimal point or exponent ("1.0", not "1").
inline std::string format_number(double v) {
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) {
            break;
        }
    }
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::string format_fraction(const Fraction &f) {
    return std::to_string(f.num) + "/" + std::to_string(f.den);
}

inline std::string sha256_hex(const std::string &data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    require(EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) == 1,
            ErrorKind::InvariantViolation, "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

inline std::string dump(const json &doc) {
    return doc.dump(2) + "\n";
}

inline json optional_number(const std::optional<double> &v) {
    return v ? json(*v) : json(nullptr);
}

namespace cmd {

inline std::uint64_t seed_of(const json &config) {
    const auto &s = io::field(config, "seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0), ErrorKind::InvalidInput,
            "'seed' must be a nonnegative integer");
    return s.get<std::uint64_t>();
}

inline std::size_t count_of(const json &config, const std::string &key) {
    const auto &v = io::field(config, key);
    require(v.is_number_integer() && v.get<std::int64_t>() >= 1, ErrorKind::InvalidInput,
            "'" + key + "' must be a positive integer");
    return v.get<std::size_t>();
}

inline MicroModel model_of(const json &config) {
    return model_from_json(io::field(config, "model"));
}

// -- born -------------------------------------------------------------------

inline CommandOutput born(const json &config, std::size_t) {
    const DensityState rho = parse_state(io::field(config, "state"));
    const auto observables = parse_spectral_observables(io::field(config, "observables"));
    const auto &queries = io::field(config, "queries");
    require(queries.is_array(), ErrorKind::InvalidInput, "'queries' must be an array");
    std::ostringstream csv;
    csv << "observable,delta,probability\n";
    for (const auto &q : queries) {
        const auto label = io::text(io::field(q, "observable"), "observable");
        const SpectralObservable *obs = nullptr;
        for (const auto &o : observables) {
            if (o.label() == label) {
                obs = &o;
            }
        }
        require(obs != nullptr, ErrorKind::InvalidInput, "query refers to unknown observable '" + label + "'");
        const OutcomeSet delta(io::number_list(io::field(q, "delta"), "delta"), q.value("contains_a0", false));
        std::string members;
        for (double v : delta.members) {
            members += (members.empty() ? "" : ";") + format_number(v);
        }
        csv << label << "," << members << "," << format_number(born_probability(rho, *obs, delta)) << "\n";
    }
    return {{{"born.csv", csv.str()}}, kExitOk, ""};
}

// -- simulate ---------------------------------------------------------------

inline CommandOutput simulate(const json &config, std::size_t workers) {
    const MicroModel model = model_of(config);
    const MacroProperty property = parse_property(io::field(config, "property"));
    model.observable(property.observable);
    const std::size_t n = count_of(config, "n");
    const auto report = convergence_report(model, property, n, seed_of(config), workers);
    const auto &t = report.tally;
    const IdentityCheck identities = t.check_identities();

    std::ostringstream csv;
    csv << "class,N,N0,NF,NF_detected,freq_total,freq_detect,freq_conditional,class_identity\n";
    for (std::size_t i = 0; i < t.per_class.size(); ++i) {
        const auto &c = t.per_class[i];
        const std::int64_t detected = c.n - c.n0;
        std::string ft = c.n > 0 ? format_fraction(Fraction::make(c.nf, c.n)) : "undefined";
        std::string fd = c.n > 0 ? format_fraction(Fraction::make(detected, c.n)) : "undefined";
        std::string fc = detected > 0 ? format_fraction(Fraction::make(c.nf_detected, detected)) : "undefined";
        bool holds = true;
        if (detected > 0) {
            holds = Fraction::make(c.nf, c.n) == Fraction::make(detected, c.n) * Fraction::make(c.nf, detected);
        }
        csv << i << "," << c.n << "," << c.n0 << "," << c.nf << "," << c.nf_detected << "," << ft << "," << fd << ","
            << fc << "," << (holds ? "true" : "false") << "\n";
    }
    const auto fc = t.freq_conditional();
    csv << "total," << t.n << "," << t.n0 << "," << t.nf() << "," << t.nf_detected() << ","
        << format_fraction(t.freq_total()) << "," << format_fraction(t.freq_detect()) << ","
        << (fc ? format_fraction(*fc) : "undefined") << "," << (identities.state_identity ? "true" : "false")
        << "\n";

    json conv;
    conv["format_version"] = kFormatVersion;
    conv["property"] = property_to_json(property);
    conv["n"] = n;
    conv["analytic"] = {{"total", report.analytic.total},
                        {"detect", report.analytic.detect},
                        {"conditional", optional_number(report.analytic.conditional)}};
    conv["empirical"] = {{"total", report.freq_total},
                         {"detect", report.freq_detect},
                         {"conditional", optional_number(report.freq_conditional)}};
    conv["deviation"] = {
        {"total", report.dev_total}, {"detect", report.dev_detect}, {"conditional", report.dev_conditional}};
    conv["standard_error"] = {
        {"total", report.se_total}, {"detect", report.se_detect}, {"conditional", report.se_conditional}};
    conv["within_5_standard_errors"] = report.within(5.0);
    conv["identities"] = {{"class_identity", identities.class_identity},
                          {"state_identity", identities.state_identity},
                          {"dichotomy", identities.dichotomy},
                          {"counters", identities.counters}};
    CommandOutput out{{{"tally.csv", csv.str()}, {"convergence.json", dump(conv)}}, kExitOk, ""};
    if (!identities.all()) {
        out.exit_code = kExitInvariant;
        out.message = "frequency identity check failed";
    }
    return out;
}

// -- synthesize -------------------------------------------------------------

inline CoincidenceRule coincidence_rule_of(const json &config) {
    if (!config.contains("coincidences")) {
        return CoincidenceRule::Independent;
    }
    const std::string name = io::text(config["coincidences"], "coincidences");
    if (name == "independent") {
        return CoincidenceRule::Independent;
    }
    if (name == "free") {
        return CoincidenceRule::Free;
    }
    fail(ErrorKind::InvalidInput, "coincidences must be \"independent\" or \"free\", got \"" + name + "\"");
}

inline ChshTarget chsh_target_of(const json &config) {
    ChshTarget t;
    t.correlations = parse_correlations(io::field(config, "target"));
    t.eta = io::number(io::field(config, "eta"), "eta");
    t.coincidences = coincidence_rule_of(config);
    validate_target(t);
    return t;
}

inline json chsh_target_to_json(const ChshTarget &t) {
    return json{{"correlations", {{t.correlations[0][0], t.correlations[0][1]},
                                  {t.correlations[1][0], t.correlations[1][1]}}},
                {"eta", t.eta},
                {"coincidences", coincidence_rule_name(t.coincidences)}};
}

inline CommandOutput synthesize(const json &config, std::size_t) {
    const std::string mode = config.value("mode", std::string("chsh"));
    json report;
    report["format_version"] = kFormatVersion;
    report["mode"] = mode;
    if (mode == "product") {
        const DensityState rho = parse_state(io::field(config, "state"));
        const auto observables = parse_spectral_observables(io::field(config, "observables"));
        const MicroModel model = synthesize_product(rho, observables, io::number(io::field(config, "detect"), "detect"));
        std::vector<MacroProperty> singles;
        for (const auto &q : observables) {
            for (double a : q.spectrum()) {
                singles.push_back({q.label(), OutcomeSet({a})});
            }
        }
        const auto consistency = quantum_consistency(model, singles);
        report["status"] = "feasible";
        report["classes"] = model.classes.size();
        report["max_born_deviation"] = consistency.max_deviation;
        return {{{"model.json", dump(model_to_json(model))}, {"synthesis.json", dump(report)}}, kExitOk, ""};
    }
    require(mode == "chsh", ErrorKind::InvalidInput, "unknown synthesis mode '" + mode + "'");
    const ChshTarget target = chsh_target_of(config);
    const auto result = synthesize_chsh(target);
    report["target"] = chsh_target_to_json(target);
    report["phase1_objective"] = result.lp.phase1_objective;
    report["pivots"] = result.lp.pivots;
    if (!result.feasible()) {
        report["status"] = "infeasible";
        return {{{"synthesis.json", dump(report)}}, kExitOk, ""};
    }
    report["status"] = "feasible";
    report["classes"] = result.model->classes.size();
    report["max_target_error"] = result.max_target_error;
    report["conditional_s"] = result.conditional_s;
    report["unconditional_s"] = result.unconditional_s;
    return {{{"model.json", dump(model_to_json(*result.model))}, {"synthesis.json", dump(report)}}, kExitOk, ""};
}

// -- chsh -------------------------------------------------------------------

inline CommandOutput chsh(const json &config, std::size_t workers) {
    MicroModel model;
    if (config.contains("synthesize")) {
        const auto result = synthesize_chsh(chsh_target_of(config["synthesize"]));
        require(result.feasible(), ErrorKind::InvalidInput, "the requested CHSH targets are infeasible");
        model = *result.model;
    } else {
        model = model_of(config);
    }
    ChshSettings settings;
    if (config.contains("settings")) {
        const auto a = io::text_list(io::field(config["settings"], "a"), "settings.a");
        const auto b = io::text_list(io::field(config["settings"], "b"), "settings.b");
        require(a.size() == 2 && b.size() == 2, ErrorKind::InvalidInput, "CHSH needs two settings per side");
        settings.side_a = {a[0], a[1]};
        settings.side_b = {b[0], b[1]};
    }
    const std::size_t n = count_of(config, "n_per_block");
    const auto report = chsh_blockwise(model, settings, n, seed_of(config), workers);

    json doc;
    doc["format_version"] = kFormatVersion;
    doc["n_per_block"] = n;
    json blocks = json::array();
    std::ostringstream table;
    table << "pair        objects   coincidences  E_estimate            std_error             E_analytic\n";
    for (const auto &b : report.blocks) {
        blocks.push_back({{"observable", b.observable},
                          {"x", b.x + 1},
                          {"y", b.y + 1},
                          {"seed", b.seed},
                          {"first_id", b.first_id},
                          {"size", b.size},
                          {"coincidences", b.coincidences},
                          {"estimate", optional_number(b.estimate)},
                          {"standard_error", b.standard_error},
                          {"analytic_conditional", optional_number(b.analytic_conditional)},
                          {"analytic_unconditional", b.analytic_unconditional},
                          {"status", b.estimate ? "defined" : "undefined"}});
        char line[256];
        std::snprintf(line, sizeof(line), "%-10s  %-8zu  %-12zu  %-20s  %-20s  %s\n", b.observable.c_str(), b.size,
                      b.coincidences, b.estimate ? format_number(*b.estimate).c_str() : "undefined",
                      format_number(b.standard_error).c_str(),
                      b.analytic_conditional ? format_number(*b.analytic_conditional).c_str() : "undefined");
        table << line;
    }
    doc["blocks"] = std::move(blocks);
    doc["s_estimate"] = optional_number(report.s_estimate);
    doc["s_standard_error"] = report.s_standard_error;
    doc["analytic_conditional_s"] = optional_number(report.analytic_conditional_s);
    doc["analytic_unconditional_s"] = report.analytic_unconditional_s;
    table << "\nS (blocks, detected only) = "
          << (report.s_estimate ? format_number(*report.s_estimate) : std::string("undefined")) << " +/- "
          << format_number(report.s_standard_error) << "\n";
    table << "S (analytic, detected only) = "
          << (report.analytic_conditional_s ? format_number(*report.analytic_conditional_s) : std::string("undefined"))
          << "\n";
    table << "S (analytic, all objects)   = " << format_number(report.analytic_unconditional_s) << "\n";
    return {{{"chsh.json", dump(doc)}, {"chsh.txt", table.str()}}, kExitOk, ""};
}

// -- ks ---------------------------------------------------------------------

inline CommandOutput ks(const json &config, std::size_t workers) {
    const KSSystem system = parse_ks_system(io::field(config, "system"));
    const std::size_t n = count_of(config, "n_per_context");
    const bool corrupt = config.value("corrupt", false);
    const auto search = ks_global_search(system);
    const Assignment witness = assignment_from_mask(system, search.witness);

    json doc;
    doc["format_version"] = kFormatVersion;
    doc["system"] = ks_system_to_json(system);
    json satisfying = json::array();
    for (std::size_t k = 0; k < search.satisfying.size() && k < 64; ++k) {
        satisfying.push_back(assignment_to_json(assignment_from_mask(system, search.satisfying[k])));
    }
    doc["search"] = {{"assignments_checked", search.assignments_checked},
                     {"satisfying_count", search.satisfying.size()},
                     {"satisfying_first_64", satisfying},
                     {"min_violations", search.min_violations},
                     {"minimizer_count", search.minimizers.size()},
                     {"witness", assignment_to_json(witness)},
                     {"witness_violations", violated_contexts(system, witness).size()}};
    MicroModel model;
    try {
        model = ks_evasion_model(system, search);
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::InfeasibleEvasion) {
            throw;
        }
        doc["evasion"] = {{"status", "infeasible"}, {"reason", e.what()}};
        return {{{"ks.json", dump(doc)}}, kExitOk, ""};
    }
    std::size_t corrupted_class = 0;
    if (corrupt) {
        for (std::size_t i = 0; i < model.classes.size(); ++i) {
            bool hidden = false;
            for (const auto &[label, r] : model.classes[i].responses) {
                hidden = hidden || r.detect == 0.0;
            }
            if (hidden) {
                corrupted_class = i;
                break;
            }
        }
        model = restore_detection(model, corrupted_class);
    }
    doc["evasion"] = {{"status", "constructed"},
                      {"classes", model.classes.size()},
                      {"corrupted", corrupt},
                      {"corrupted_class", corrupt ? json(corrupted_class) : json(nullptr)}};
    json contexts = json::array();
    std::size_t total_violations = 0;
    for (const auto &c : ks_context_check(model, system, n, seed_of(config), workers)) {
        total_violations += c.violations;
        contexts.push_back({{"context", c.label},
                            {"target", c.target},
                            {"runs", c.runs},
                            {"coincidences", c.coincidences},
                            {"violations", c.violations},
                            {"coincidence_rate", c.coincidence_rate},
                            {"analytic_coincidence_rate", c.analytic_coincidence_rate},
                            {"status", context_status_name(c.status)}});
    }
    doc["check"] = {{"n_per_context", n}, {"contexts", contexts}, {"total_violations", total_violations}};
    return {{{"ks.json", dump(doc)}}, kExitOk, ""};
}

// -- threshold --------------------------------------------------------------

inline CommandOutput threshold(const json &config, std::size_t) {
    const auto correlations = parse_correlations(io::field(config, "target"));
    const double tol = io::number(io::field(config, "tol"), "tol");
    const CoincidenceRule rule = coincidence_rule_of(config);
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["tol"] = tol;
    doc["coincidences"] = coincidence_rule_name(rule);
    try {
        const auto r = eta_threshold(correlations, tol, rule);
        doc["status"] = "found";
        doc["eta_star"] = r.eta_star;
        doc["eta_upper"] = r.eta_upper;
        doc["bisection_solves"] = r.bisection_solves;
        json probes = json::array();
        for (const auto &p : r.probes) {
            probes.push_back({{"eta", p.eta}, {"feasible", p.feasible}});
        }
        doc["probes"] = std::move(probes);
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NoThreshold) {
            throw;
        }
        doc["status"] = "no-threshold";
        doc["reason"] = e.what();
    }
    return {{{"threshold.json", dump(doc)}}, kExitOk, ""};
}

}  // namespace cmd

/// Inlines "model_file" (relative to base_dir) as "model" and applies a seed override.
inline json effective_config(json config, const std::filesystem::path &base_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt) {
    require(config.is_object(), ErrorKind::InvalidInput, "config must be a JSON object");
    check_format_version(config);
    if (config.contains("model_file")) {
        std::filesystem::path p = io::text(config["model_file"], "model_file");
        if (p.is_relative()) {
            p = base_dir / p;
        }
        std::ifstream in(p);
        require(in.good(), ErrorKind::InvalidInput, "cannot open model file " + p.string());
        config["model"] = json::parse(in);
        config.erase("model_file");
    }
    if (seed_override) {
        config["seed"] = *seed_override;
    }
    require(config.contains("seed"), ErrorKind::InvalidInput, "config must set 'seed'");
    cmd::seed_of(config);
    return config;
}

/// Runs a command on an effective config, mapping library errors to exit codes.
inline CommandOutput run_command(const std::string &name, const json &config, std::size_t workers) {
    try {
        if (name == "born") {
            return cmd::born(config, workers);
        }
        if (name == "simulate") {
            return cmd::simulate(config, workers);
        }
        if (name == "synthesize") {
            return cmd::synthesize(config, workers);
        }
        if (name == "chsh") {
            return cmd::chsh(config, workers);
        }
        if (name == "ks") {
            return cmd::ks(config, workers);
        }
        if (name == "threshold") {
            return cmd::threshold(config, workers);
        }
        return {{}, kExitConfig, "unknown command '" + name + "'"};
    } catch (const Error &e) {
        const bool internal =
            e.kind() == ErrorKind::InvariantViolation || e.kind() == ErrorKind::NumericallyAmbiguous;
        return {{}, internal ? kExitInvariant : kExitConfig, e.what()};
    } catch (const json::exception &e) {
        return {{}, kExitConfig, std::string("config error: ") + e.what()};
    }
}

struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::string version = OBJECTIVEQM_VERSION;
    std::string timestamp;
    std::size_t workers = 1;
    std::map<std::string, std::string> digests;  // output file → SHA-256

    json to_json() const {
        return json{{"format_version", kFormatVersion},
                    {"kind", "objectiveqm.manifest"},
                    {"command", command},
                    {"config", config},
                    {"seed", seed},
                    {"version", version},
                    {"timestamp", timestamp},
                    {"workers", workers},
                    {"outputs", digests}};
    }

    static RunManifest from_json(const json &doc) {
        check_format_version(doc);
        RunManifest m;
        m.command = io::text(io::field(doc, "command"), "command");
        m.config = io::field(doc, "config");
        m.seed = io::field(doc, "seed").get<std::uint64_t>();
        m.version = doc.value("version", std::string());
        m.timestamp = doc.value("timestamp", std::string());
        m.workers = doc.value("workers", std::size_t{1});
        for (const auto &[file, digest] : io::field(doc, "outputs").items()) {
            m.digests[file] = digest.get<std::string>();
        }
        return m;
    }
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct ExecutionResult {
    CommandOutput output;
    RunManifest manifest;
};

/// Runs a command and writes its outputs plus manifest.json into out_dir.
inline ExecutionResult execute(const std::string &name, const json &effective, const std::filesystem::path &out_dir,
                               std::size_t workers) {
    ExecutionResult r;
    r.output = run_command(name, effective, workers);
    if (r.output.files.empty()) {
        return r;
    }
    std::filesystem::create_directories(out_dir);
    r.manifest.command = name;
    r.manifest.config = effective;
    r.manifest.seed = effective["seed"].get<std::uint64_t>();
    r.manifest.timestamp = utc_timestamp();
    r.manifest.workers = workers;
    for (const auto &[file, contents] : r.output.files) {
        std::ofstream out(out_dir / file, std::ios::binary);
        out << contents;
        require(out.good(), ErrorKind::InvalidInput, "cannot write " + (out_dir / file).string());
        r.manifest.digests[file] = sha256_hex(contents);
    }
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    mf << dump(r.manifest.to_json());
    return r;
}

struct ReplayResult {
    ExecutionResult execution;
    std::vector<std::string> mismatches;  // output files whose digest differs from the manifest

    bool identical() const {
        return mismatches.empty() && execution.output.exit_code == kExitOk;
    }
};

inline ReplayResult replay(const RunManifest &manifest, const std::filesystem::path &out_dir, std::size_t workers) {
    ReplayResult r;
    r.execution = execute(manifest.command, manifest.config, out_dir, workers);
    for (const auto &[file, digest] : manifest.digests) {
        auto it = r.execution.manifest.digests.find(file);
        if (it == r.execution.manifest.digests.end() || it->second != digest) {
            r.mismatches.push_back(file);
        }
    }
    for (const auto &[file, digest] : r.execution.manifest.digests) {
        if (manifest.digests.count(file) == 0) {
            r.mismatches.push_back(file);
        }
    }
    return r;
}

}  // namespace objectiveqm
