#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "didact/agents.hpp"
#include "didact/dialogue.hpp"
#include "didact/verify.hpp"

namespace didact {

struct Problem {
    std::string id;
    std::string text;
    PrivilegedInfo privileged = PrivilegedInfo::answer("?");
};

// One didactic episode: the student answers, the answer is verified, and
// on failure the teacher (who sees the privileged info) gives feedback
// until the turn budget runs out. Each feedback utterance is passed
// through detect_leakage and the flag stored on the record. Backend
// failures terminate the episode as BackendError with the partial record
// retained.
EpisodeRecord run_episode(const Problem& problem, AgentBackend& student, AgentBackend& teacher,
                          const EpisodeConfig& config, const EquivalencePolicy& policy,
                          ProgramRunner* runner = nullptr);

// max_turns forced to 1; no teacher backend is ever invoked.
EpisodeRecord run_single_turn(const Problem& problem, AgentBackend& student,
                              const EpisodeConfig& config, const EquivalencePolicy& policy,
                              ProgramRunner* runner = nullptr);

// Same loop, but critique turns come from the student backend itself,
// given only the public observation — privileged info is used for
// verification (scoring) alone and never reaches critique calls.
EpisodeRecord run_autodidact(const Problem& problem, AgentBackend& model,
                             const EpisodeConfig& config, const EquivalencePolicy& policy,
                             ProgramRunner* runner = nullptr);

struct BenchmarkSpec {
    std::vector<Problem> problems; // ids must be unique
    EpisodeConfig episode_config;
    EpisodeMode mode = EpisodeMode::Didactic;
    int worker_limit = 1;
    uint64_t seed = 0;
    EquivalencePolicy policy;
};

// Fresh backends per episode, constructed from the problem and the
// derived per-episode seed. This is what makes benchmark results
// independent of worker count and scheduling order.
using BackendFactory =
    std::function<std::unique_ptr<AgentBackend>(const Problem&, uint64_t episode_seed)>;

// Runs every problem to exactly one record, in spec order. Per-episode
// RNG streams are seeded from hash(spec.seed, problem_id). Individual
// BackendError episodes are recorded, never fatal to the batch. In
// SingleTurn and Autodidact modes the teacher factory is unused.
std::vector<EpisodeRecord> run_benchmark(const BenchmarkSpec& spec, const BackendFactory& student,
                                         const BackendFactory& teacher,
                                         ProgramRunner* runner = nullptr);

// JSONL problems file: one object per line, {id, problem, answer} or
// {id, problem, tests: [{input, expected}]}.
std::vector<Problem> load_problems_jsonl(const std::string& path);

} // namespace didact
