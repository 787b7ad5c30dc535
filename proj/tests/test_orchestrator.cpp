#include <doctest.h>

#include <nlohmann/json.hpp>

#include "didact/orchestrator.hpp"
#include "didact/store.hpp"

#include "support/test_util.hpp"

using namespace didact;
namespace ts = didact::testsupport;

namespace {

// Counts calls per role; answers from fixed strings.
class CountingBackend final : public AgentBackend {
public:
    CountingBackend(std::string student_reply, std::string teacher_reply)
        : student_reply_(std::move(student_reply)), teacher_reply_(std::move(teacher_reply)) {}

    std::string next_student_turn(const Observation&) override {
        ++student_calls;
        return student_reply_;
    }
    std::string next_teacher_turn(const DialogueState&) override {
        ++teacher_calls;
        return teacher_reply_;
    }
    std::string next_critique_turn(const Observation& observation) override {
        ++critique_calls;
        critique_observations.push_back(observation);
        return teacher_reply_;
    }
    std::string complete(const std::string&) override { return teacher_reply_; }

    int student_calls = 0;
    int teacher_calls = 0;
    int critique_calls = 0;
    std::vector<Observation> critique_observations;

private:
    std::string student_reply_;
    std::string teacher_reply_;
};

Problem answer_problem(const std::string& id = "p", const std::string& truth = "42") {
    return Problem{id, "guess the value", PrivilegedInfo::answer(truth)};
}

} // namespace

TEST_SUITE_BEGIN("orchestrator");

TEST_CASE("a correct first answer ends the episode with reward 1 and no feedback") {
    CountingBackend student("FINAL ANSWER: 42", "");
    CountingBackend teacher("", "hint");
    const auto record = run_episode(answer_problem(), student, teacher,
                                    EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(record.reward == 1);
    CHECK(record.termination.kind == TerminationKind::SolvedAtTurn);
    CHECK(record.termination.turn == 1);
    CHECK(record.student_turns() == 1);
    CHECK(record.feedback_turns() == 0);
    CHECK(teacher.teacher_calls == 0);
    CHECK(record.verdicts.size() == 1);
    CHECK(record.mode == EpisodeMode::Didactic);
}

TEST_CASE("an always-wrong student exhausts the budget with no final feedback") {
    CountingBackend student("FINAL ANSWER: 41", "");
    CountingBackend teacher("", "look again");
    const auto record = run_episode(answer_problem(), student, teacher,
                                    EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(record.reward == 0);
    CHECK(record.termination.kind == TerminationKind::ExhaustedTurns);
    CHECK(record.student_turns() == 3);
    CHECK(record.feedback_turns() == 2);
    CHECK(teacher.teacher_calls == 2);
    CHECK(record.leak_flags.size() == 2);
}

TEST_CASE("feedback after the final failure is generated when configured") {
    CountingBackend student("FINAL ANSWER: 41", "");
    CountingBackend teacher("", "look again");
    const auto record = run_episode(answer_problem(), student, teacher,
                                    EpisodeConfig{3, 0, true}, EquivalencePolicy{});
    CHECK(record.feedback_turns() == 3);
    CHECK(teacher.teacher_calls == 3);
}

TEST_CASE("a plastic synthetic student solves at turn two") {
    SyntheticStudentBackend student({0.0, 1.0, 3}, "42");
    SyntheticTeacherBackend teacher({0.0, "", 4});
    const auto record = run_episode(answer_problem(), student, teacher,
                                    EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(record.termination.kind == TerminationKind::SolvedAtTurn);
    CHECK(record.termination.turn == 2);
    CHECK(record.reward == 1);
}

TEST_CASE("single-turn mode never touches the teacher") {
    CountingBackend student("FINAL ANSWER: 41", "");
    const auto record = run_single_turn(answer_problem(), student, EpisodeConfig{5, 0, true},
                                        EquivalencePolicy{});
    CHECK(record.mode == EpisodeMode::SingleTurn);
    CHECK(record.termination.kind == TerminationKind::ExhaustedTurns);
    CHECK(record.student_turns() == 1);
    CHECK(record.feedback_turns() == 0);

    CountingBackend solver("FINAL ANSWER: 42", "");
    const auto solved = run_single_turn(answer_problem(), solver, EpisodeConfig{5, 0, false},
                                        EquivalencePolicy{});
    CHECK(solved.reward == 1);
}

TEST_CASE("autodidact critiques see only the public observation") {
    CountingBackend model("FINAL ANSWER: 41", "reconsider the sign");
    const std::string sentinel = "SENTINEL88Y";
    const auto record = run_autodidact(answer_problem("p", sentinel), model,
                                       EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(record.mode == EpisodeMode::Autodidact);
    CHECK(model.student_calls == 3);
    CHECK(model.critique_calls == 2);
    CHECK(model.teacher_calls == 0);
    for (const auto& observation : model.critique_observations) {
        const std::string serialized = observation_to_json(observation).dump();
        CHECK(serialized.find(sentinel) == std::string::npos);
    }
}

TEST_CASE("an immediately-correct model makes autodidact match didactic") {
    SyntheticStudentBackend model({1.0, 0.0, 5}, "42");
    const auto autodidact = run_autodidact(answer_problem(), model, EpisodeConfig{3, 0, false},
                                           EquivalencePolicy{});
    SyntheticStudentBackend student({1.0, 0.0, 5}, "42");
    SyntheticTeacherBackend teacher({0.0, "", 6});
    const auto didactic = run_episode(answer_problem(), student, teacher,
                                      EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(autodidact.reward == didactic.reward);
    REQUIRE(autodidact.utterances.size() == didactic.utterances.size());
    for (size_t i = 0; i < autodidact.utterances.size(); ++i) {
        CHECK(autodidact.utterances[i].text == didactic.utterances[i].text);
    }
}

TEST_CASE("backend failure mid-episode retains the partial record") {
    ScriptedBackend student({"FINAL ANSWER: 41"}); // exhausted on turn two
    SyntheticTeacherBackend teacher({0.0, "", 6});
    const auto record = run_episode(answer_problem(), student, teacher,
                                    EpisodeConfig{3, 0, false}, EquivalencePolicy{});
    CHECK(record.termination.kind == TerminationKind::BackendError);
    CHECK(record.reward == 0);
    CHECK(record.student_turns() == 1);
    CHECK(record.feedback_turns() == 1);
    CHECK(record.termination.detail.find("student backend") != std::string::npos);
}

TEST_CASE("benchmark results are identical for 1 worker and 8 workers") {
    BenchmarkSpec spec;
    for (int i = 0; i < 10; ++i) {
        spec.problems.push_back(answer_problem("p" + std::to_string(i), "gt" + std::to_string(i)));
    }
    spec.episode_config = EpisodeConfig{4, 0, false};
    spec.seed = 99;

    const BackendFactory student = [](const Problem& problem, uint64_t seed) {
        return std::make_unique<SyntheticStudentBackend>(
            SyntheticStudentParams{0.3, 0.4, seed}, problem.privileged.ground_truth());
    };
    const BackendFactory teacher = [](const Problem&, uint64_t seed) {
        return std::make_unique<SyntheticTeacherBackend>(SyntheticTeacherParams{0.0, "", seed});
    };

    spec.worker_limit = 1;
    const auto serial = run_benchmark(spec, student, teacher);
    spec.worker_limit = 8;
    const auto parallel = run_benchmark(spec, student, teacher);

    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(episode_to_json(serial[i]) == episode_to_json(parallel[i]));
    }
}

TEST_CASE("an empty problem list yields an empty result") {
    BenchmarkSpec spec;
    const BackendFactory none = [](const Problem&, uint64_t) -> std::unique_ptr<AgentBackend> {
        throw BackendError("unused");
    };
    CHECK(run_benchmark(spec, none, none).empty());
}

TEST_CASE("one failing backend among ten is recorded, not fatal") {
    BenchmarkSpec spec;
    for (int i = 0; i < 10; ++i) {
        spec.problems.push_back(answer_problem("p" + std::to_string(i)));
    }
    spec.episode_config = EpisodeConfig{2, 0, false};
    const BackendFactory student = [](const Problem& problem,
                                      uint64_t seed) -> std::unique_ptr<AgentBackend> {
        if (problem.id == "p7") {
            throw BackendError("injected construction failure");
        }
        return std::make_unique<SyntheticStudentBackend>(SyntheticStudentParams{1.0, 0.0, seed},
                                                         problem.privileged.ground_truth());
    };
    const BackendFactory teacher = [](const Problem&, uint64_t seed) {
        return std::make_unique<SyntheticTeacherBackend>(SyntheticTeacherParams{0.0, "", seed});
    };
    const auto records = run_benchmark(spec, student, teacher);
    REQUIRE(records.size() == 10);
    int solved = 0;
    int failed = 0;
    for (const auto& record : records) {
        if (record.termination.kind == TerminationKind::SolvedAtTurn) {
            ++solved;
        }
        if (record.termination.kind == TerminationKind::BackendError) {
            ++failed;
            CHECK(record.problem_id == "p7");
        }
    }
    CHECK(solved == 9);
    CHECK(failed == 1);
}

TEST_CASE("duplicate problem ids are rejected") {
    BenchmarkSpec spec;
    spec.problems.push_back(answer_problem("same"));
    spec.problems.push_back(answer_problem("same"));
    const BackendFactory none = [](const Problem&, uint64_t) -> std::unique_ptr<AgentBackend> {
        throw BackendError("unused");
    };
    CHECK_THROWS_AS(run_benchmark(spec, none, none), std::invalid_argument);
}

TEST_CASE("fuzz: the feedback-count identity holds across configurations") {
    Rng rng(606);
    for (int i = 0; i < 300; ++i) {
        const int max_turns = 1 + static_cast<int>(rng.below(5));
        const bool trailing_feedback = rng.below(2) == 0;
        const double a0 = rng.uniform01();
        const double p = rng.uniform01();
        SyntheticStudentBackend student({a0, p, rng.below(1u << 31)}, "42");
        SyntheticTeacherBackend teacher({0.0, "", rng.below(1u << 31)});
        const auto record =
            run_episode(answer_problem(), student, teacher,
                        EpisodeConfig{max_turns, 0, trailing_feedback}, EquivalencePolicy{});

        const bool solved = record.termination.kind == TerminationKind::SolvedAtTurn;
        const int failed_turns = record.student_turns() - (solved ? 1 : 0);
        const int expected_feedback =
            failed_turns -
            ((record.termination.kind == TerminationKind::ExhaustedTurns && !trailing_feedback) ? 1
                                                                                                : 0);
        REQUIRE(record.feedback_turns() == expected_feedback);
        REQUIRE((record.reward == 0 || record.reward == 1));
        REQUIRE((record.reward == 1) == solved);
        REQUIRE(record.student_turns() <= max_turns);
        REQUIRE(record.leak_flags.size() == static_cast<size_t>(record.feedback_turns()));
    }
}

TEST_CASE("problems load from JSONL with line diagnostics") {
    ts::TempDir dir("problems");
    const auto path = dir.file("problems.jsonl");
    ts::write_file(path, "{\"id\":\"a\",\"problem\":\"q1\",\"answer\":\"1\"}\n"
                         "{\"id\":\"b\",\"problem\":\"q2\",\"tests\":[{\"input\":\"2\","
                         "\"expected\":\"4\"}]}\n");
    const auto problems = load_problems_jsonl(path);
    REQUIRE(problems.size() == 2);
    CHECK(problems[0].privileged.kind() == PrivilegedKind::GroundTruthAnswer);
    CHECK(problems[1].privileged.kind() == PrivilegedKind::ExpectedProgramOutputs);

    ts::write_file(path, "{\"id\":\"a\",\"problem\":\"q1\"}\n");
    try {
        load_problems_jsonl(path);
        FAIL("expected failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
}

TEST_SUITE_END();
