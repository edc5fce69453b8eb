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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "objectiveqm/commands.hpp"

namespace {

using objectiveqm::json;

int report(const objectiveqm::CommandOutput &out, const std::filesystem::path &dir) {
    if (out.exit_code != objectiveqm::kExitOk) {
        std::cerr << "objectiveqm: " << out.message << "\n";
    }
    for (const auto &[file, contents] : out.files) {
        std::cout << (dir / file).string() << "\n";
    }
    return out.exit_code;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Objective hidden-property measurement models: simulation, synthesis and no-go experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;

    const std::map<std::string, std::string> descriptions = {
        {"born", "Born-rule probabilities for a state and observables"},
        {"simulate", "prepare and measure an ensemble, tally the frequencies"},
        {"synthesize", "build a micro-model from quantum targets"},
        {"chsh", "block-wise CHSH estimate on a micro-model"},
        {"ks", "Kochen-Specker search, evasion model and context check"},
        {"threshold", "detection-efficiency threshold for CHSH targets"},
    };
    app.set_version_flag("--version", OBJECTIVEQM_VERSION);

    for (const auto &name : objectiveqm::command_names()) {
        auto *sub = app.add_subcommand(name, descriptions.at(name));
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed_override, "override the config's master seed");
    }
    std::string manifest_path;
    auto *replay = app.add_subcommand("replay", "rerun a manifest and compare output digests");
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")
        ->required()
        ->check(CLI::ExistingFile);
    replay->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : objectiveqm::kExitConfig;
    }

    const std::size_t workers = objectiveqm::worker_count_from_env();
    try {
        if (replay->parsed()) {
            std::ifstream in(manifest_path);
            const auto manifest = objectiveqm::RunManifest::from_json(json::parse(in));
            const auto r = objectiveqm::replay(manifest, out_dir, workers);
            const int code = report(r.execution.output, out_dir);
            if (code != objectiveqm::kExitOk) {
                return code;
            }
            for (const auto &file : r.mismatches) {
                std::cerr << "objectiveqm: replay output differs: " << file << "\n";
            }
            return r.identical() ? objectiveqm::kExitOk : objectiveqm::kExitInvariant;
        }
        const std::string name = app.get_subcommands().front()->get_name();
        std::ifstream in(config_path);
        const json raw = json::parse(in);
        const json config =
            objectiveqm::effective_config(raw, std::filesystem::path(config_path).parent_path(), seed_override);
        return report(objectiveqm::execute(name, config, out_dir, workers).output, out_dir);
    } catch (const objectiveqm::Error &e) {
        std::cerr << "objectiveqm: " << e.what() << "\n";
        return e.kind() == objectiveqm::ErrorKind::InvariantViolation ? objectiveqm::kExitInvariant
                                                                      : objectiveqm::kExitConfig;
    } catch (const json::exception &e) {
        std::cerr << "objectiveqm: config error: " << e.what() << "\n";
        return objectiveqm::kExitConfig;
    }
}
