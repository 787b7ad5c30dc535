#include "didact/orchestrator.hpp"

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "didact/leakage.hpp"

namespace didact {

namespace {

EpisodeRecord run_loop(const Problem& problem, AgentBackend& student, AgentBackend* teacher,
                       EpisodeMode mode, const EpisodeConfig& config,
                       const EquivalencePolicy& policy, ProgramRunner* runner) {
    EpisodeRecord episode = new_episode(problem.id, problem.text, problem.privileged, config, mode);
    const bool self_critique = mode == EpisodeMode::Autodidact;

    for (int turn = 1; turn <= config.max_turns; ++turn) {
        std::string answer;
        try {
            answer = student.next_student_turn(observation_of(episode));
            if (answer.empty()) {
                throw BackendError("empty student reply");
            }
        } catch (const std::exception& e) {
            mark_backend_error(episode, std::string("student backend: ") + e.what());
            return episode;
        }
        append_turn(episode, Role::Student, std::move(answer));
        episode.verdicts.push_back(
            verify(episode.utterances.back().text, episode.privileged, policy, runner));
        if (episode.verdicts.back().correct) {
            mark_solved(episode, turn);
            return episode;
        }

        const bool final_turn = turn == config.max_turns;
        if (final_turn && !config.feedback_after_final_failure) {
            break;
        }
        std::string feedback;
        try {
            feedback = self_critique ? student.next_critique_turn(observation_of(episode))
                                     : teacher->next_teacher_turn(state_of(episode));
            if (feedback.empty()) {
                throw BackendError("empty feedback reply");
            }
        } catch (const std::exception& e) {
            mark_backend_error(episode, std::string(self_critique ? "critique" : "teacher") +
                                            " backend: " + e.what());
            return episode;
        }
        episode.leak_flags.push_back(detect_leakage(feedback, episode.privileged));
        append_turn(episode, Role::Teacher, std::move(feedback));
    }

    mark_exhausted(episode);
    return episode;
}

} // namespace

EpisodeRecord run_episode(const Problem& problem, AgentBackend& student, AgentBackend& teacher,
                          const EpisodeConfig& config, const EquivalencePolicy& policy,
                          ProgramRunner* runner) {
    return run_loop(problem, student, &teacher, EpisodeMode::Didactic, config, policy, runner);
}

EpisodeRecord run_single_turn(const Problem& problem, AgentBackend& student,
                              const EpisodeConfig& config, const EquivalencePolicy& policy,
                              ProgramRunner* runner) {
    EpisodeConfig single = config;
    single.max_turns = 1;
    single.feedback_after_final_failure = false;
    return run_loop(problem, student, nullptr, EpisodeMode::SingleTurn, single, policy, runner);
}

EpisodeRecord run_autodidact(const Problem& problem, AgentBackend& model,
                             const EpisodeConfig& config, const EquivalencePolicy& policy,
                             ProgramRunner* runner) {
    return run_loop(problem, model, nullptr, EpisodeMode::Autodidact, config, policy, runner);
}

std::vector<EpisodeRecord> run_benchmark(const BenchmarkSpec& spec, const BackendFactory& student,
                                         const BackendFactory& teacher, ProgramRunner* runner) {
    if (spec.worker_limit < 1) {
        throw std::invalid_argument("run_benchmark: worker_limit must be >= 1");
    }
    {
        std::set<std::string> ids;
        for (const auto& problem : spec.problems) {
            if (!ids.insert(problem.id).second) {
                throw std::invalid_argument("run_benchmark: duplicate problem id '" + problem.id + "'");
            }
        }
    }

    const size_t count = spec.problems.size();
    std::vector<EpisodeRecord> records(count);
    std::atomic<size_t> next{0};

    auto work = [&] {
        while (true) {
            const size_t index = next.fetch_add(1);
            if (index >= count) {
                return;
            }
            const Problem& problem = spec.problems[index];
            const uint64_t episode_seed = derive_seed(spec.seed, problem.id);
            EpisodeConfig config = spec.episode_config;
            config.seed = episode_seed;
            EquivalencePolicy policy = spec.policy;
            policy.seed = derive_seed(episode_seed, "verify");

            try {
                auto student_backend = student(problem, derive_seed(episode_seed, "student"));
                switch (spec.mode) {
                case EpisodeMode::Didactic: {
                    auto teacher_backend = teacher(problem, derive_seed(episode_seed, "teacher"));
                    records[index] =
                        run_episode(problem, *student_backend, *teacher_backend, config, policy, runner);
                    break;
                }
                case EpisodeMode::SingleTurn:
                    records[index] = run_single_turn(problem, *student_backend, config, policy, runner);
                    break;
                case EpisodeMode::Autodidact:
                    records[index] = run_autodidact(problem, *student_backend, config, policy, runner);
                    break;
                }
            } catch (const std::exception& e) {
                EpisodeRecord episode =
                    new_episode(problem.id, problem.text, problem.privileged, config, spec.mode);
                mark_backend_error(episode, std::string("backend construction: ") + e.what());
                records[index] = std::move(episode);
            }
        }
    };

    const size_t workers = std::min<size_t>(static_cast<size_t>(spec.worker_limit), count);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t i = 0; i < workers; ++i) {
            pool.emplace_back(work);
        }
        for (auto& thread : pool) {
            thread.join();
        }
    }
    return records;
}

std::vector<Problem> load_problems_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open problems file: " + path);
    }
    std::vector<Problem> problems;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        nlohmann::json entry;
        try {
            entry = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": invalid JSON: " + e.what());
        }
        try {
            Problem problem;
            problem.id = entry.at("id").get<std::string>();
            problem.text = entry.at("problem").get<std::string>();
            if (entry.contains("answer")) {
                problem.privileged = PrivilegedInfo::answer(entry.at("answer").get<std::string>());
            } else if (entry.contains("tests")) {
                std::vector<TestCase> tests;
                for (const auto& test : entry.at("tests")) {
                    tests.push_back(TestCase{test.at("input").get<std::string>(),
                                             test.at("expected").get<std::string>()});
                }
                problem.privileged = PrivilegedInfo::program_outputs(std::move(tests));
            } else {
                throw std::runtime_error("needs either \"answer\" or \"tests\"");
            }
            problems.push_back(std::move(problem));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    return problems;
}

} // namespace didact
