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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace objectiveqm {

/// Stable 64-bit FNV-1a; used to turn labels into stream keys.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Random stream addressed by (seed, object id, tag) rather than by position in
/// a shared sequence, so any partition of objects across workers draws the
/// same numbers.
class CounterStream {
   public:
    CounterStream(std::uint64_t seed, std::uint64_t object_id, std::uint64_t tag)
        : key_(splitmix64_mix(splitmix64_mix(splitmix64_mix(seed) ^ object_id) ^ tag)) {
    }

    std::uint64_t next() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(key_ + counter_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

   private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Child seed for a named sub-run (CHSH block, KS context, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return splitmix64_mix(master ^ splitmix64_mix(fnv1a64(label)));
}

/// Worker cap from OBJECTIVEQM_THREADS; 1 when unset or malformed.
inline std::size_t worker_count_from_env() {
    const char *raw = std::getenv("OBJECTIVEQM_THREADS");
    if (raw == nullptr) {
        return 1;
    }
    char *end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || v < 1) {
        return 1;
    }
    return static_cast<std::size_t>(v);
}

/// Calls fn(begin, end) on contiguous chunks of [0, n) across up to `workers` threads.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t workers, Fn &&fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n / 4096 + 1));
    if (workers == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto &t : threads) {
        t.join();
    }
}

}  // namespace objectiveqm
