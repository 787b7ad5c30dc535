#include "didact/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace didact {

namespace {

using nlohmann::json;

[[noreturn]] void fail_key(const std::string& path, const std::string& message) {
    throw std::runtime_error("config: " + path + ": " + message);
}

template <typename T>
T get_or(const json& j, const std::string& parent, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail_key(parent + "." + key, e.what());
    }
}

BackendConfig parse_backend(const json& j, const std::string& path) {
    BackendConfig backend;
    if (j.is_null()) {
        return backend;
    }
    const std::string kind = get_or<std::string>(j, path, "kind", "");
    if (kind.empty()) {
        fail_key(path + ".kind", "missing");
    }
    if (kind == "scripted") {
        backend.kind = BackendConfig::Kind::Scripted;
        backend.scripted_replies =
            get_or<std::vector<std::string>>(j, path, "replies", {});
        if (backend.scripted_replies.empty()) {
            fail_key(path + ".replies", "scripted backend needs at least one reply");
        }
    } else if (kind == "synthetic_student") {
        backend.kind = BackendConfig::Kind::SyntheticStudent;
        backend.student_params.initial_accuracy = get_or<double>(j, path, "initial_accuracy", 0.5);
        backend.student_params.plasticity = get_or<double>(j, path, "plasticity", 0.5);
    } else if (kind == "synthetic_teacher") {
        backend.kind = BackendConfig::Kind::SyntheticTeacher;
        backend.teacher_params.leak_probability = get_or<double>(j, path, "leak_probability", 0.0);
        backend.teacher_params.hint_template = get_or<std::string>(j, path, "hint_template", "");
    } else if (kind == "remote") {
        backend.kind = BackendConfig::Kind::Remote;
        backend.endpoint.url = get_or<std::string>(j, path, "url", "");
        if (backend.endpoint.url.empty()) {
            fail_key(path + ".url", "missing");
        }
        backend.endpoint.model = get_or<std::string>(j, path, "model", "");
        backend.endpoint.temperature = get_or<double>(j, path, "temperature", 0.0);
        backend.endpoint.reply_path =
            get_or<std::string>(j, path, "reply_path", backend.endpoint.reply_path);
        backend.endpoint.api_key_env =
            get_or<std::string>(j, path, "api_key_env", backend.endpoint.api_key_env);
        backend.endpoint.timeout_ms = get_or<int>(j, path, "timeout_ms", 30000);
        backend.endpoint.max_retries = get_or<int>(j, path, "max_retries", 2);
        backend.endpoint.backoff_ms = get_or<int>(j, path, "backoff_ms", 100);
    } else {
        fail_key(path + ".kind", "unknown backend kind '" + kind + "'");
    }
    return backend;
}

} // namespace

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config: " + path + ": invalid JSON: " + e.what());
    }

    Config config;
    if (j.contains("student")) {
        config.student = parse_backend(j.at("student"), "student");
    }
    if (j.contains("teacher")) {
        config.teacher = parse_backend(j.at("teacher"), "teacher");
    }
    if (j.contains("judge")) {
        config.judge = parse_backend(j.at("judge"), "judge");
    }
    if (j.contains("episode")) {
        const auto& e = j.at("episode");
        config.episode.max_turns = get_or<int>(e, "episode", "max_turns", 3);
        config.episode.seed = get_or<uint64_t>(e, "episode", "seed", 0);
        config.episode.feedback_after_final_failure =
            get_or<bool>(e, "episode", "feedback_after_final_failure", false);
        if (config.episode.max_turns < 1) {
            fail_key("episode.max_turns", "must be >= 1");
        }
    }
    if (j.contains("verifier")) {
        const auto& v = j.at("verifier");
        config.verifier.sample_count = get_or<int>(v, "verifier", "sample_count", 32);
        config.verifier.domain_lo = get_or<double>(v, "verifier", "domain_lo", 0.2);
        config.verifier.domain_hi = get_or<double>(v, "verifier", "domain_hi", 2.0);
        config.verifier.relative_tolerance =
            get_or<double>(v, "verifier", "relative_tolerance", 1e-9);
        config.verifier.absolute_tolerance =
            get_or<double>(v, "verifier", "absolute_tolerance", 1e-12);
        config.verifier.max_resamples_on_singularity =
            get_or<int>(v, "verifier", "max_resamples_on_singularity", 100);
        config.verifier.seed = get_or<uint64_t>(v, "verifier", "seed", 0);
        if (config.verifier.sample_count < 1) {
            fail_key("verifier.sample_count", "must be >= 1");
        }
        if (config.verifier.relative_tolerance <= 0 || config.verifier.absolute_tolerance <= 0) {
            fail_key("verifier", "tolerances must be positive");
        }
    }
    if (j.contains("runner")) {
        const auto& r = j.at("runner");
        SubprocessRunnerConfig runner;
        runner.command = get_or<std::string>(r, "runner", "command", "");
        if (runner.command.empty()) {
            fail_key("runner.command", "missing");
        }
        runner.timeout_ms = get_or<int>(r, "runner", "timeout_ms", 5000);
        config.runner = runner;
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        config.store_path = get_or<std::string>(p, "paths", "store", config.store_path);
        config.exports_dir = get_or<std::string>(p, "paths", "exports", config.exports_dir);
        config.reports_dir = get_or<std::string>(p, "paths", "reports", config.reports_dir);
    }
    config.worker_limit = get_or<int>(j, "(root)", "worker_limit", 1);
    if (config.worker_limit < 1) {
        fail_key("worker_limit", "must be >= 1");
    }
    if (j.contains("prompts")) {
        const auto& p = j.at("prompts");
        config.teacher_prompt_path = get_or<std::string>(p, "prompts", "teacher", "");
        config.critique_prompt_path = get_or<std::string>(p, "prompts", "critique", "");
        config.judge_prompt_path = get_or<std::string>(p, "prompts", "judge", "");
    }
    return config;
}

std::string load_template(const std::string& path, const std::string& fallback) {
    if (path.empty()) {
        return fallback;
    }
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open prompt template: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::unique_ptr<AgentBackend> make_backend(const BackendConfig& config, const Problem& problem,
                                           uint64_t seed, const Config& full) {
    switch (config.kind) {
    case BackendConfig::Kind::Scripted:
        return std::make_unique<ScriptedBackend>(config.scripted_replies);
    case BackendConfig::Kind::SyntheticStudent: {
        if (problem.privileged.kind() != PrivilegedKind::GroundTruthAnswer) {
            throw BackendError("synthetic student needs a ground-truth-answer problem");
        }
        SyntheticStudentParams params = config.student_params;
        params.seed = seed;
        return std::make_unique<SyntheticStudentBackend>(params, problem.privileged.ground_truth());
    }
    case BackendConfig::Kind::SyntheticTeacher: {
        SyntheticTeacherParams params = config.teacher_params;
        params.seed = seed;
        return std::make_unique<SyntheticTeacherBackend>(params);
    }
    case BackendConfig::Kind::Remote:
        return std::make_unique<RemoteChatBackend>(
            config.endpoint, load_template(full.teacher_prompt_path, teacher_prompt_template()),
            load_template(full.critique_prompt_path, critique_prompt_template()));
    case BackendConfig::Kind::Unset:
        break;
    }
    throw BackendError("backend not configured");
}

BackendFactory make_backend_factory(const BackendConfig& config, const Config& full) {
    return [config, full](const Problem& problem, uint64_t seed) {
        return make_backend(config, problem, seed, full);
    };
}

} // namespace didact
