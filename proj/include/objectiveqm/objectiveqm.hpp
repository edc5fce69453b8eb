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

#pragma once

// Library modules. The CLI layer (model_file.hpp, commands.hpp) is included
// separately because it pulls in nlohmann/json and OpenSSL.
#include "objectiveqm/ensemble_engine.hpp"
#include "objectiveqm/error.hpp"
#include "objectiveqm/lp_feasibility.hpp"
#include "objectiveqm/micro_model.hpp"
#include "objectiveqm/model_synthesis.hpp"
#include "objectiveqm/nogo_experiments.hpp"
#include "objectiveqm/quantum_oracle.hpp"
#include "objectiveqm/random_stream.hpp"
