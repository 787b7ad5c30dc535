#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "didact/agents.hpp"
#include "didact/orchestrator.hpp"
#include "didact/verify.hpp"

namespace didact {

struct BackendConfig {
    enum class Kind { Unset, Scripted, SyntheticStudent, SyntheticTeacher, Remote };
    Kind kind = Kind::Unset;
    std::vector<std::string> scripted_replies;
    SyntheticStudentParams student_params;
    SyntheticTeacherParams teacher_params;
    EndpointConfig endpoint;
};

struct Config {
    BackendConfig student;
    BackendConfig teacher;
    BackendConfig judge;
    EpisodeConfig episode;
    EquivalencePolicy verifier;
    std::optional<SubprocessRunnerConfig> runner;
    std::string store_path = "didact_store.jsonl";
    std::string exports_dir = ".";
    std::string reports_dir = ".";
    int worker_limit = 1;
    std::string teacher_prompt_path;  // empty selects the built-in template
    std::string critique_prompt_path; // "
    std::string judge_prompt_path;    // "
};

// JSON config file. Every key is optional; malformed values report the
// offending key path. Synthetic backends are the network-free defaults.
Config load_config(const std::string& path);

// Template text from the configured path, or the built-in default.
std::string load_template(const std::string& path, const std::string& fallback);

// Instantiates one backend, seeded for one episode. Synthetic students
// take the correct answer from the problem's privileged info.
std::unique_ptr<AgentBackend> make_backend(const BackendConfig& config, const Problem& problem,
                                           uint64_t seed, const Config& full);

BackendFactory make_backend_factory(const BackendConfig& config, const Config& full);

} // namespace didact
