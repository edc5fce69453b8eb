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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gtest/gtest.h"
#include "objectiveqm/commands.hpp"
#include "test_support.hpp"

using namespace objectiveqm;
using objectiveqm::testing::Rng;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test, removed afterwards.
class ScratchDir {
   public:
    ScratchDir() {
        const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / ("objectiveqm_" + std::string(info->test_suite_name()) + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path &path() const {
        return path_;
    }

   private:
    fs::path path_;
};

std::string read_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json with_seed(json config, std::uint64_t seed = 7) {
    config["format_version"] = 1;
    config["seed"] = seed;
    return config;
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

void expect_same_model(const MicroModel &a, const MicroModel &b) {
    EXPECT_EQ(a.mode, b.mode);
    EXPECT_EQ(a.observables, b.observables);
    EXPECT_EQ(a.classes, b.classes);
    ASSERT_EQ(a.target.has_value(), b.target.has_value());
    if (a.target) {
        EXPECT_EQ(a.target->matrix(), b.target->matrix());
    }
    ASSERT_EQ(a.quantum_observables.size(), b.quantum_observables.size());
    for (std::size_t k = 0; k < a.quantum_observables.size(); ++k) {
        EXPECT_EQ(a.quantum_observables[k].label(), b.quantum_observables[k].label());
        EXPECT_EQ(a.quantum_observables[k].spectrum(), b.quantum_observables[k].spectrum());
    }
}

MicroModel reparse(const MicroModel &m) {
    return model_from_json(json::parse(dump(model_to_json(m))));
}

/// Small configs for every command, as used by the replay tests.
std::map<std::string, json> sample_configs() {
    MicroModel two_class;
    two_class.add_elementary("A", {1.0, -1.0});
    two_class.classes = {{0.3, {{"A", {0.8, 1.0}}}}, {0.7, {{"A", {0.4, -1.0}}}}};
    return {
        {"born", with_seed({{"state", {{"preset", "singlet"}}},
                            {"observables", {{"preset", "chsh-optimal"}}},
                            {"queries", {{{"observable", "A1*B1"}, {"delta", {1}}}, {{"observable", "A2"}, {"delta", {-1}}}}}})},
        {"simulate", with_seed({{"model", model_to_json(two_class)},
                                {"property", {{"observable", "A"}, {"delta", {1}}, {"contains_a0", false}}},
                                {"n", 20000}})},
        {"synthesize", with_seed({{"target", {{"preset", "chsh-optimal"}}}, {"eta", 0.5}})},
        {"chsh", with_seed({{"synthesize", {{"target", {{"preset", "chsh-optimal"}}}, {"eta", 0.5}}},
                            {"n_per_block", 20000}})},
        {"ks", with_seed({{"system", {{"preset", "peres-mermin"}}}, {"n_per_context", 5000}})},
        {"threshold", with_seed({{"target", {{"preset", "chsh-optimal"}}}, {"tol", 0.005}})},
    };
}

}  // namespace

TEST(format_number, shortest_round_trip_with_decimal_point) {
    EXPECT_EQ(format_number(1.0), "1.0");
    EXPECT_EQ(format_number(-2.0), "-2.0");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(1e-20), "1e-20");
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double v = u(rng);
        EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
    }
}

TEST(sha256_hex, known_digests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(model_file, random_models_round_trip) {
    Rng rng(21);
    for (int k = 0; k < 200; ++k) {
        const auto m = objectiveqm::testing::random_model(rng, {.deterministic = k % 2 == 0});
        expect_same_model(m, reparse(m));
    }
}

TEST(model_file, synthesized_models_round_trip) {
    Rng rng(22);
    const auto sample = objectiveqm::testing::random_mixed_state(4, rng);
    const auto product = synthesize_product(
        sample.state, {objectiveqm::testing::random_observable(4, rng, "p"), objectiveqm::testing::random_observable(4, rng, "q")},
        0.6);
    const auto again = reparse(product);
    expect_same_model(product, again);
    EXPECT_LE(quantum_consistency(again, {{"p", OutcomeSet({product.observable("p").spectrum[0]})}}).max_deviation,
              1e-12);

    const auto chsh = synthesize_chsh(chsh_optimal_target(0.5));
    const auto chsh_again = reparse(*chsh.model);
    expect_same_model(*chsh.model, chsh_again);
    EXPECT_NEAR(std::abs(chsh_conditional_s(chsh_again)), 2.0 * std::numbers::sqrt2, 1e-9);

    const auto s = peres_mermin_system();
    const auto ks = ks_evasion_model(s, ks_global_search(s));
    expect_same_model(ks, reparse(ks));
}

TEST(model_file, invalid_documents) {
    auto doc = model_to_json(synthesize_chsh({{{{1.0, 1.0}, {1.0, 1.0}}}, 1.0}).model.value());
    auto bad_version = doc;
    bad_version["format_version"] = 2;
    EXPECT_THROW(model_from_json(bad_version), Error);
    auto bad_weight = doc;
    bad_weight["classes"][0]["weight"] = 0.5;
    EXPECT_THROW(model_from_json(bad_weight), Error);
    auto bad_value = doc;
    bad_value["classes"][0]["responses"]["A1"]["value"] = 3;
    EXPECT_THROW(model_from_json(bad_value), Error);
    auto missing = doc;
    missing.erase("mode");
    EXPECT_THROW(model_from_json(missing), Error);
}

TEST(parse_state, forms_agree) {
    const json amplitudes = {{"amplitudes", {0.0, std::numbers::sqrt2 / 2, -std::numbers::sqrt2 / 2, 0.0}}};
    EXPECT_LE(parse_state(amplitudes).matrix().max_abs_diff(singlet_state().matrix()), 1e-15);
    const json mixture = {{"mixture",
                           {{{"weight", 0.5}, {"state", {{"amplitudes", {1, 0}}}}},
                            {{"weight", 0.5}, {"state", {{"amplitudes", {0, 1}}}}}}}};
    EXPECT_LE(parse_state(mixture).matrix().max_abs_diff(ComplexMatrix::diagonal(std::vector<double>{0.5, 0.5})),
              1e-15);
    const json product = {{"product", {{{"amplitudes", {1, 0}}}, {{"amplitudes", {0, 1}}}}}};
    EXPECT_NEAR(parse_state(product).matrix()(1, 1).real(), 1.0, 1e-15);
    json complex_amp;
    complex_amp["amplitudes"] = json::array({json::array({1, 0}), json::array({0, 1})});
    EXPECT_NEAR(parse_state(complex_amp).matrix()(0, 1).imag(), -0.5, 1e-15);
    EXPECT_THROW(parse_state(json{{"density", {0.5, 0.1, 0.2, 0.5}}}), Error);
    EXPECT_THROW(parse_state(json{{"preset", "bell"}}), Error);
}

TEST(born_command, eigenstate_row) {
    const auto config = with_seed({{"state", {{"density", {1, 0, 0, 0}}}},
                                   {"observables", {{{"label", "sz"}, {"direction", {0, 0, 1}}}}},
                                   {"queries", {{{"observable", "sz"}, {"delta", {1}}}}}});
    const auto out = run_command("born", config, 1);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    EXPECT_EQ(out.files.at("born.csv"), "observable,delta,probability\nsz,1.0,1.0\n");
}

TEST(born_command, empty_query_list_gives_header_only) {
    const auto config = with_seed({{"state", {{"preset", "singlet"}}},
                                   {"observables", {{"preset", "chsh-optimal"}}},
                                   {"queries", json::array()}});
    EXPECT_EQ(run_command("born", config, 1).files.at("born.csv"), "observable,delta,probability\n");
}

TEST(born_command, singlet_preset_table_matches_closed_form) {
    json queries = json::array();
    for (const char *pair : {"A1*B1", "A1*B2", "A2*B1", "A2*B2"}) {
        queries.push_back({{"observable", pair}, {"delta", {1}}});
    }
    queries.push_back({{"observable", "B2"}, {"delta", {-1, 1}}});
    const auto config = with_seed(
        {{"state", {{"preset", "singlet"}}}, {"observables", {{"preset", "chsh-optimal"}}}, {"queries", queries}});
    const auto rows = lines_of(run_command("born", config, 1).files.at("born.csv"));
    ASSERT_EQ(rows.size(), 6u);
    // P(product = +1) = (1 + E)/2 with E = -cos(θa - θb).
    const double angles_a[2] = {0.0, std::numbers::pi / 2};
    const double angles_b[2] = {std::numbers::pi / 4, -std::numbers::pi / 4};
    for (int k = 0; k < 4; ++k) {
        const double e = -std::cos(angles_a[k / 2] - angles_b[k % 2]);
        const auto cells = rows[1 + k];
        const double p = std::stod(cells.substr(cells.rfind(',') + 1));
        EXPECT_NEAR(p, (1.0 + e) / 2.0, 1e-12) << cells;
    }
    EXPECT_EQ(rows[5], "B2,-1.0;1.0,1.0");
}

TEST(born_command, no_registration_outcome_is_a_config_error) {
    const auto config = with_seed({{"state", {{"preset", "singlet"}}},
                                   {"observables", {{"preset", "chsh-optimal"}}},
                                   {"queries", {{{"observable", "A1"}, {"delta", {1}}, {"contains_a0", true}}}}});
    EXPECT_EQ(run_command("born", config, 1).exit_code, kExitConfig);
}

TEST(simulate_command, tally_rows_and_identities) {
    const auto config = sample_configs().at("simulate");
    const auto out = run_command("simulate", config, 1);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    const auto rows = lines_of(out.files.at("tally.csv"));
    ASSERT_EQ(rows.size(), 4u);  // header, two classes, totals
    EXPECT_EQ(rows[3].rfind("total,20000,", 0), 0u);
    const auto conv = json::parse(out.files.at("convergence.json"));
    EXPECT_TRUE(conv["identities"]["class_identity"].get<bool>());
    EXPECT_TRUE(conv["within_5_standard_errors"].get<bool>());
    EXPECT_NEAR(conv["analytic"]["detect"].get<double>(), 0.3 * 0.8 + 0.7 * 0.4, 1e-15);
}

TEST(simulate_command, single_class_full_detection) {
    MicroModel m;
    m.add_elementary("A", {1.0, -1.0});
    m.classes = {{1.0, {{"A", {1.0, 1.0}}}}};
    const auto config = with_seed({{"model", model_to_json(m)},
                                   {"property", {{"observable", "A"}, {"delta", {1}}}},
                                   {"n", 1000}});
    const auto out = run_command("simulate", config, 1);
    const auto rows = lines_of(out.files.at("tally.csv"));
    EXPECT_EQ(rows[1], "0,1000,0,1000,1000,1/1,1/1,1/1,true");
}

TEST(synthesize_command, classical_targets_give_model_file) {
    const auto config = with_seed({{"target", {{"correlations", {{1, 1}, {-1, -1}}}}}, {"eta", 1.0}});
    const auto out = run_command("synthesize", config, 1);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    const auto model = model_from_json(json::parse(out.files.at("model.json")));
    EXPECT_NEAR(*conditional_correlation(model, "A2", "B2"), -1.0, 1e-12);
}

TEST(synthesize_command, singlet_targets_infeasible_at_full_efficiency) {
    const auto config = with_seed({{"target", {{"preset", "chsh-optimal"}}}, {"eta", 1.0}});
    const auto out = run_command("synthesize", config, 1);
    EXPECT_EQ(out.exit_code, kExitOk);
    EXPECT_EQ(out.files.count("model.json"), 0u);
    EXPECT_EQ(json::parse(out.files.at("synthesis.json"))["status"], "infeasible");
}

TEST(synthesize_command, singlet_targets_at_half_efficiency_round_trip) {
    const auto out = run_command("synthesize", sample_configs().at("synthesize"), 1);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    const auto model = model_from_json(json::parse(out.files.at("model.json")));
    const auto target = chsh_optimal_target(0.5);
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            EXPECT_NEAR(*conditional_correlation(model, kChshSideA[x], kChshSideB[y]), target.correlations[x][y], 1e-9);
        }
    }
}

TEST(synthesize_command, product_mode) {
    const auto config = with_seed({{"mode", "product"},
                                   {"state", {{"amplitudes", {0.6, 0.8}}}},
                                   {"observables", {{{"label", "Z"}, {"direction", {0, 0, 1}}}, {{"label", "X"}, {"angle", 1.5707963267948966}}}},
                                   {"detect", 0.5}});
    const auto out = run_command("synthesize", config, 1);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    EXPECT_LE(json::parse(out.files.at("synthesis.json"))["max_born_deviation"].get<double>(), 1e-12);
    const auto model = model_from_json(json::parse(out.files.at("model.json")));
    EXPECT_EQ(model.classes.size(), 4u);
}

TEST(synthesize_command, bad_inputs_are_config_errors) {
    EXPECT_EQ(run_command("synthesize", with_seed({{"target", {{"preset", "chsh-optimal"}}}, {"eta", 0.0}}), 1).exit_code,
              kExitConfig);
    EXPECT_EQ(run_command("synthesize", with_seed({{"mode", "other"}}), 1).exit_code, kExitConfig);
    EXPECT_EQ(run_command("synthesize",
                          with_seed({{"target", {{"preset", "chsh-optimal"}}}, {"eta", 0.5}, {"coincidences", "x"}}), 1)
                  .exit_code,
              kExitConfig);
    EXPECT_EQ(run_command("nonsense", with_seed({}), 1).exit_code, kExitConfig);
}

TEST(chsh_command, reports_blocks_and_table) {
    const auto out = run_command("chsh", sample_configs().at("chsh"), 2);
    ASSERT_EQ(out.exit_code, kExitOk) << out.message;
    const auto doc = json::parse(out.files.at("chsh.json"));
    EXPECT_EQ(doc["blocks"].size(), 4u);
    EXPECT_NEAR(doc["analytic_conditional_s"].get<double>(), 2.0 * std::numbers::sqrt2, 1e-9);
    EXPECT_LE(doc["analytic_unconditional_s"].get<double>(), 2.0 + 1e-12);
    EXPECT_NE(out.files.at("chsh.txt").find("S (blocks, detected only)"), std::string::npos);
}

TEST(ks_command, peres_mermin_pipeline_and_negative_control) {
    auto config = sample_configs().at("ks");
    const auto clean = json::parse(run_command("ks", config, 1).files.at("ks.json"));
    EXPECT_EQ(clean["search"]["satisfying_count"], 0);
    EXPECT_EQ(clean["search"]["min_violations"], 1);
    EXPECT_EQ(clean["check"]["total_violations"], 0);
    for (const auto &c : clean["check"]["contexts"]) {
        EXPECT_EQ(c["status"], "verified");
    }
    config["corrupt"] = true;
    const auto corrupted = json::parse(run_command("ks", config, 1).files.at("ks.json"));
    EXPECT_GT(corrupted["check"]["total_violations"].get<int>(), 0);
}

TEST(ks_command, satisfiable_toy_system) {
    const auto config = with_seed({{"system",
                                    {{"observables", {"a", "b"}},
                                     {"contexts", {{{"members", {"a", "b"}}, {"target", -1}}}}}},
                                   {"n_per_context", 100}});
    const auto doc = json::parse(run_command("ks", config, 1).files.at("ks.json"));
    EXPECT_EQ(doc["search"]["satisfying_count"], 2);
    EXPECT_EQ(doc["evasion"]["classes"], 1);
    EXPECT_EQ(doc["check"]["contexts"][0]["coincidences"], 100);
}

TEST(threshold_command, singlet_and_classical) {
    const auto doc = json::parse(run_command("threshold", sample_configs().at("threshold"), 1).files.at("threshold.json"));
    EXPECT_EQ(doc["status"], "found");
    EXPECT_GE(doc["eta_star"].get<double>(), 0.82);
    EXPECT_LE(doc["eta_star"].get<double>(), 0.84);
    const auto classical = with_seed({{"target", {{"correlations", {{1, 1}, {1, 1}}}}}, {"tol", 0.01}});
    EXPECT_EQ(json::parse(run_command("threshold", classical, 1).files.at("threshold.json"))["eta_star"], 1.0);
}

TEST(effective_config, requires_seed_and_version_and_inlines_model_file) {
    ScratchDir dir;
    EXPECT_THROW(effective_config(json{{"format_version", 1}}, dir.path()), Error);
    EXPECT_THROW(effective_config(json{{"seed", 1}}, dir.path()), Error);
    EXPECT_THROW(effective_config(json{{"format_version", 1}, {"seed", -4}}, dir.path()), Error);
    EXPECT_EQ(effective_config(json{{"format_version", 1}, {"seed", 1}}, dir.path(), 99)["seed"], 99);

    const auto model = synthesize_chsh({{{{1.0, 1.0}, {1.0, 1.0}}}, 1.0}).model.value();
    std::ofstream(dir.path() / "m.json") << dump(model_to_json(model));
    const auto eff = effective_config(json{{"format_version", 1}, {"seed", 1}, {"model_file", "m.json"}}, dir.path());
    EXPECT_FALSE(eff.contains("model_file"));
    expect_same_model(model, model_from_json(eff["model"]));
}

TEST(manifest, replay_is_byte_identical_across_worker_counts) {
    ScratchDir dir;
    for (const auto &[name, config] : sample_configs()) {
        const auto first = execute(name, config, dir.path() / name / "w1", 1);
        ASSERT_EQ(first.output.exit_code, kExitOk) << name << ": " << first.output.message;
        const auto manifest =
            RunManifest::from_json(json::parse(read_file(dir.path() / name / "w1" / "manifest.json")));
        EXPECT_EQ(manifest.command, name);
        EXPECT_EQ(manifest.digests.size(), first.output.files.size());
        for (std::size_t workers : {1u, 3u, 8u}) {
            const auto r = replay(manifest, dir.path() / name / ("replay" + std::to_string(workers)), workers);
            EXPECT_TRUE(r.identical()) << name << " with " << workers << " workers";
            for (const auto &[file, contents] : first.output.files) {
                EXPECT_EQ(read_file(dir.path() / name / ("replay" + std::to_string(workers)) / file), contents);
            }
        }
    }
}

TEST(manifest, tampered_digest_is_reported) {
    ScratchDir dir;
    const auto first = execute("born", sample_configs().at("born"), dir.path() / "a", 1);
    auto manifest = first.manifest;
    manifest.digests["born.csv"] = std::string(64, '0');
    const auto r = replay(manifest, dir.path() / "b", 1);
    EXPECT_FALSE(r.identical());
    EXPECT_EQ(r.mismatches, std::vector<std::string>{"born.csv"});
}

TEST(manifest, seed_changes_outputs) {
    auto config = sample_configs().at("simulate");
    const auto a = run_command("simulate", config, 1);
    config["seed"] = 8;
    const auto b = run_command("simulate", config, 1);
    EXPECT_NE(a.files.at("tally.csv"), b.files.at("tally.csv"));
}
