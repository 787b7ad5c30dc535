#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "didact/leak_flag.hpp"
#include "didact/verdict.hpp"

namespace didact {

enum class Role { Teacher, Student };

const char* to_string(Role role);

struct Utterance {
    Role role = Role::Teacher;
    std::string text;
    int turn_index = 0; // 0 is the problem statement
};

// Public conversation history, in utterance order. First element is the
// problem statement (Teacher). Never carries privileged content.
struct Observation {
    std::vector<Utterance> history;
};

struct TestCase {
    std::string input;
    std::string expected;
};

enum class PrivilegedKind { GroundTruthAnswer, ExpectedProgramOutputs };

// The teacher-only knowledge: a ground-truth answer string or the expected
// outputs of hidden test cases. Immutable once constructed; payload non-empty.
class PrivilegedInfo {
public:
    static PrivilegedInfo answer(std::string ground_truth);
    static PrivilegedInfo program_outputs(std::vector<TestCase> tests);

    PrivilegedKind kind() const { return kind_; }
    const std::string& ground_truth() const;
    const std::vector<TestCase>& tests() const;

private:
    PrivilegedInfo() = default;
    PrivilegedKind kind_ = PrivilegedKind::GroundTruthAnswer;
    std::string ground_truth_;
    std::vector<TestCase> tests_;
};

// What the teacher policy conditions on: privileged info plus the public
// observation at construction time.
struct DialogueState {
    PrivilegedInfo privileged;
    Observation observation;
};

struct EpisodeConfig {
    int max_turns = 3; // student attempts allowed, >= 1
    uint64_t seed = 0;
    bool feedback_after_final_failure = false;
};

enum class EpisodeMode { Didactic, SingleTurn, Autodidact };

enum class TerminationKind { Pending, SolvedAtTurn, ExhaustedTurns, BackendError };

struct Termination {
    TerminationKind kind = TerminationKind::Pending;
    int turn = 0;       // student turn that solved, for SolvedAtTurn
    std::string detail; // populated for BackendError
};

const char* to_string(EpisodeMode mode);
const char* to_string(TerminationKind kind);

// Full didactic conversation: utterances, per-student-turn verdicts,
// per-feedback-turn leak flags, terminal reward, termination reason.
struct EpisodeRecord {
    std::string problem_id;
    std::string problem_text;
    PrivilegedInfo privileged = PrivilegedInfo::answer("?");
    EpisodeConfig config;
    EpisodeMode mode = EpisodeMode::Didactic;
    std::vector<Utterance> utterances;
    std::vector<Verdict> verdicts;
    std::vector<LeakFlag> leak_flags;
    int reward = 0; // 1 iff termination is SolvedAtTurn
    Termination termination;

    bool terminated() const { return termination.kind != TerminationKind::Pending; }
    int student_turns() const;
    int feedback_turns() const; // teacher utterances excluding the problem statement
};

// Creates an episode holding exactly the problem statement (Teacher, index 0).
// Rejects empty problem text or max_turns < 1.
EpisodeRecord new_episode(std::string problem_id, std::string problem_text,
                          PrivilegedInfo privileged, EpisodeConfig config,
                          EpisodeMode mode = EpisodeMode::Didactic);

// Appends the next utterance. Roles must alternate starting from Teacher,
// text must be non-empty, the episode must not be terminated, and student
// turns may not exceed config.max_turns.
void append_turn(EpisodeRecord& episode, Role role, std::string text);

Observation observation_of(const EpisodeRecord& episode);
DialogueState state_of(const EpisodeRecord& episode);

// Termination transitions. Each checks the record's invariants:
// SolvedAtTurn requires verdicts[turn-1] Correct and all earlier Incorrect.
void mark_solved(EpisodeRecord& episode, int student_turn);
void mark_exhausted(EpisodeRecord& episode);
void mark_backend_error(EpisodeRecord& episode, std::string detail);

} // namespace didact
