#include "didact/dialogue.hpp"

#include <algorithm>
#include <stdexcept>

namespace didact {

const char* to_string(Role role) {
    return role == Role::Teacher ? "teacher" : "student";
}

const char* to_string(VerifyMethod method) {
    switch (method) {
    case VerifyMethod::ExactString: return "exact_string";
    case VerifyMethod::NumericTolerance: return "numeric_tolerance";
    case VerifyMethod::ExpressionSampling: return "expression_sampling";
    case VerifyMethod::ProgramOutputs: return "program_outputs";
    }
    return "?";
}

const char* to_string(LeakStage stage) {
    switch (stage) {
    case LeakStage::None: return "none";
    case LeakStage::StringMatch: return "string_match";
    case LeakStage::Judge: return "judge";
    }
    return "?";
}

const char* to_string(EpisodeMode mode) {
    switch (mode) {
    case EpisodeMode::Didactic: return "didactic";
    case EpisodeMode::SingleTurn: return "single_turn";
    case EpisodeMode::Autodidact: return "autodidact";
    }
    return "?";
}

const char* to_string(TerminationKind kind) {
    switch (kind) {
    case TerminationKind::Pending: return "pending";
    case TerminationKind::SolvedAtTurn: return "solved_at_turn";
    case TerminationKind::ExhaustedTurns: return "exhausted_turns";
    case TerminationKind::BackendError: return "backend_error";
    }
    return "?";
}

PrivilegedInfo PrivilegedInfo::answer(std::string ground_truth) {
    if (ground_truth.empty()) {
        throw std::invalid_argument("privileged info: ground-truth answer must be non-empty");
    }
    PrivilegedInfo info;
    info.kind_ = PrivilegedKind::GroundTruthAnswer;
    info.ground_truth_ = std::move(ground_truth);
    return info;
}

PrivilegedInfo PrivilegedInfo::program_outputs(std::vector<TestCase> tests) {
    if (tests.empty()) {
        throw std::invalid_argument("privileged info: test list must be non-empty");
    }
    for (const auto& test : tests) {
        if (test.expected.empty()) {
            throw std::invalid_argument("privileged info: expected output must be non-empty");
        }
    }
    PrivilegedInfo info;
    info.kind_ = PrivilegedKind::ExpectedProgramOutputs;
    info.tests_ = std::move(tests);
    return info;
}

const std::string& PrivilegedInfo::ground_truth() const {
    if (kind_ != PrivilegedKind::GroundTruthAnswer) {
        throw std::logic_error("privileged info holds program outputs, not an answer");
    }
    return ground_truth_;
}

const std::vector<TestCase>& PrivilegedInfo::tests() const {
    if (kind_ != PrivilegedKind::ExpectedProgramOutputs) {
        throw std::logic_error("privileged info holds an answer, not program outputs");
    }
    return tests_;
}

int EpisodeRecord::student_turns() const {
    return static_cast<int>(std::count_if(utterances.begin(), utterances.end(),
                                          [](const Utterance& u) { return u.role == Role::Student; }));
}

int EpisodeRecord::feedback_turns() const {
    int count = 0;
    for (const auto& u : utterances) {
        if (u.role == Role::Teacher && u.turn_index > 0) {
            ++count;
        }
    }
    return count;
}

EpisodeRecord new_episode(std::string problem_id, std::string problem_text,
                          PrivilegedInfo privileged, EpisodeConfig config, EpisodeMode mode) {
    if (problem_text.empty()) {
        throw std::invalid_argument("new_episode: problem text must be non-empty (id=" + problem_id + ")");
    }
    if (config.max_turns < 1) {
        throw std::invalid_argument("new_episode: max_turns must be >= 1");
    }
    EpisodeRecord episode;
    episode.problem_id = std::move(problem_id);
    episode.problem_text = problem_text;
    episode.privileged = std::move(privileged);
    episode.config = config;
    episode.mode = mode;
    episode.utterances.push_back(Utterance{Role::Teacher, std::move(problem_text), 0});
    return episode;
}

void append_turn(EpisodeRecord& episode, Role role, std::string text) {
    if (episode.terminated()) {
        throw std::logic_error("append_turn: episode already terminated");
    }
    if (text.empty()) {
        throw std::invalid_argument("append_turn: utterance text must be non-empty");
    }
    const Role last = episode.utterances.back().role;
    const Role expected = last == Role::Teacher ? Role::Student : Role::Teacher;
    if (role != expected) {
        throw std::logic_error(std::string("append_turn: expected ") + to_string(expected) +
                               " after " + to_string(last));
    }
    if (role == Role::Student && episode.student_turns() >= episode.config.max_turns) {
        throw std::logic_error("append_turn: student turn budget exhausted");
    }
    const int index = episode.utterances.back().turn_index + 1;
    episode.utterances.push_back(Utterance{role, std::move(text), index});
}

Observation observation_of(const EpisodeRecord& episode) {
    return Observation{episode.utterances};
}

DialogueState state_of(const EpisodeRecord& episode) {
    return DialogueState{episode.privileged, observation_of(episode)};
}

void mark_solved(EpisodeRecord& episode, int student_turn) {
    if (episode.terminated()) {
        throw std::logic_error("mark_solved: episode already terminated");
    }
    if (student_turn < 1 || static_cast<size_t>(student_turn) != episode.verdicts.size()) {
        throw std::logic_error("mark_solved: solving turn must be the latest judged turn");
    }
    if (!episode.verdicts.back().correct) {
        throw std::logic_error("mark_solved: latest verdict is not Correct");
    }
    for (size_t i = 0; i + 1 < episode.verdicts.size(); ++i) {
        if (episode.verdicts[i].correct) {
            throw std::logic_error("mark_solved: an earlier verdict was already Correct");
        }
    }
    episode.reward = 1;
    episode.termination = Termination{TerminationKind::SolvedAtTurn, student_turn, ""};
}

void mark_exhausted(EpisodeRecord& episode) {
    if (episode.terminated()) {
        throw std::logic_error("mark_exhausted: episode already terminated");
    }
    for (const auto& verdict : episode.verdicts) {
        if (verdict.correct) {
            throw std::logic_error("mark_exhausted: a verdict was Correct; episode should be solved");
        }
    }
    episode.reward = 0;
    episode.termination = Termination{TerminationKind::ExhaustedTurns, 0, ""};
}

void mark_backend_error(EpisodeRecord& episode, std::string detail) {
    if (episode.terminated()) {
        throw std::logic_error("mark_backend_error: episode already terminated");
    }
    episode.reward = 0;
    episode.termination = Termination{TerminationKind::BackendError, 0, std::move(detail)};
}

} // namespace didact
