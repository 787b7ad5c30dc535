#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "didact/dialogue.hpp"
#include "didact/util.hpp"

namespace didact {

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Uniform contract for producing utterances. Student and critique calls
// receive only the public observation; privileged information reaches
// teacher calls alone — the asymmetry is enforced by these signatures.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;

    // Pre: the observation ends with a teacher utterance.
    virtual std::string next_student_turn(const Observation& observation) = 0;

    // Pre: the observation ends with a student utterance judged Incorrect.
    virtual std::string next_teacher_turn(const DialogueState& state) = 0;

    // Self-critique: a teacher-side reply produced from the public
    // observation only (autodidact mode).
    virtual std::string next_critique_turn(const Observation& observation) = 0;

    // One-shot free-form completion (judge hook and similar).
    virtual std::string complete(const std::string& prompt) = 0;
};

// Canned replies consumed in order by any of the four calls; throws
// BackendError when exhausted.
class ScriptedBackend final : public AgentBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies);

    std::string next_student_turn(const Observation& observation) override;
    std::string next_teacher_turn(const DialogueState& state) override;
    std::string next_critique_turn(const Observation& observation) override;
    std::string complete(const std::string& prompt) override;

    size_t remaining() const { return replies_.size(); }

private:
    std::string pop();
    std::deque<std::string> replies_;
};

struct SyntheticStudentParams {
    double initial_accuracy = 0.5; // a0
    double plasticity = 0.5;       // p: chance a wrong answer flips to correct after feedback
    uint64_t seed = 0;
};

// Simulated student: correct on the first attempt with probability a0;
// after feedback a wrong answer switches to correct with probability p,
// otherwise the previous answer is repeated verbatim. Resets itself when
// it sees a fresh observation (problem statement only).
class SyntheticStudentBackend final : public AgentBackend {
public:
    SyntheticStudentBackend(SyntheticStudentParams params, std::string correct_answer,
                            std::string wrong_answer = "WRONG_ANSWER");

    std::string next_student_turn(const Observation& observation) override;
    std::string next_teacher_turn(const DialogueState& state) override;
    std::string next_critique_turn(const Observation& observation) override;
    std::string complete(const std::string& prompt) override;

private:
    SyntheticStudentParams params_;
    std::string correct_;
    std::string wrong_;
    Rng rng_;
    bool answered_correct_ = false;
};

struct SyntheticTeacherParams {
    double leak_probability = 0.0; // q: chance the raw ground truth is appended (audit tests)
    std::string hint_template;     // empty selects the built-in hints
    uint64_t seed = 0;
};

// Simulated teacher: emits a hint that never contains the ground truth,
// except with probability q the raw ground truth is appended.
class SyntheticTeacherBackend final : public AgentBackend {
public:
    explicit SyntheticTeacherBackend(SyntheticTeacherParams params);

    std::string next_student_turn(const Observation& observation) override;
    std::string next_teacher_turn(const DialogueState& state) override;
    std::string next_critique_turn(const Observation& observation) override;
    std::string complete(const std::string& prompt) override;

private:
    std::string hint();
    SyntheticTeacherParams params_;
    Rng rng_;
};

struct EndpointConfig {
    std::string url; // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string model;
    double temperature = 0.0;
    // JSON pointer to the reply text within the response body.
    std::string reply_path = "/choices/0/message/content";
    std::string api_key_env = "DIDACT_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_ms = 100;
};

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

// Request assembly is split out as pure functions so the
// privileged-isolation invariant can be checked directly on bodies.
std::string build_chat_request(const EndpointConfig& endpoint,
                               const std::vector<ChatMessage>& messages);

// Student calls: Teacher -> user, Student -> assistant, no system message.
std::vector<ChatMessage> student_messages(const Observation& observation);

// Teacher calls: roles inverted, plus a leading system message rendered
// from the template with the privileged payload filled in.
std::vector<ChatMessage> teacher_messages(const DialogueState& state,
                                          const std::string& system_template);

// Critique calls: teacher-side inversion, system message without any
// privileged content.
std::vector<ChatMessage> critique_messages(const Observation& observation,
                                           const std::string& system_template);

// Built-in copies of assets/teacher_prompt.txt and assets/critique_prompt.txt.
const std::string& teacher_prompt_template();
const std::string& critique_prompt_template();

std::string privileged_payload_text(const PrivilegedInfo& privileged);

// One POST per call; retries per config on transport failure, non-success
// status, or a malformed reply. Throws BackendError after the budget.
std::string remote_chat(const EndpointConfig& endpoint, const std::vector<ChatMessage>& messages);

class RemoteChatBackend final : public AgentBackend {
public:
    explicit RemoteChatBackend(EndpointConfig endpoint);
    RemoteChatBackend(EndpointConfig endpoint, std::string teacher_template,
                      std::string critique_template);

    std::string next_student_turn(const Observation& observation) override;
    std::string next_teacher_turn(const DialogueState& state) override;
    std::string next_critique_turn(const Observation& observation) override;
    std::string complete(const std::string& prompt) override;

private:
    EndpointConfig endpoint_;
    std::string teacher_template_;
    std::string critique_template_;
};

} // namespace didact
