#include "didact/agents.hpp"

#include <array>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace didact {

namespace {

std::string replace_placeholder(std::string text, const std::string& key, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

constexpr std::array<const char*, 4> kBuiltinHints = {
    "Not quite. Re-examine your reasoning and try a different approach.",
    "That answer is incorrect. Check each step of your derivation carefully.",
    "Still not right. Consider whether an assumption you made holds in every case.",
    "Incorrect. Revisit the step where you simplified and look for a sign slip.",
};

} // namespace

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

std::string ScriptedBackend::pop() {
    if (replies_.empty()) {
        throw BackendError("scripted backend: reply queue exhausted");
    }
    std::string reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::string ScriptedBackend::next_student_turn(const Observation&) { return pop(); }
std::string ScriptedBackend::next_teacher_turn(const DialogueState&) { return pop(); }
std::string ScriptedBackend::next_critique_turn(const Observation&) { return pop(); }
std::string ScriptedBackend::complete(const std::string&) { return pop(); }

SyntheticStudentBackend::SyntheticStudentBackend(SyntheticStudentParams params,
                                                 std::string correct_answer,
                                                 std::string wrong_answer)
    : params_(params), correct_(std::move(correct_answer)), wrong_(std::move(wrong_answer)),
      rng_(params.seed) {
    if (params_.initial_accuracy < 0.0 || params_.initial_accuracy > 1.0 ||
        params_.plasticity < 0.0 || params_.plasticity > 1.0) {
        throw std::invalid_argument("synthetic student: a0 and p must lie in [0, 1]");
    }
}

std::string SyntheticStudentBackend::next_student_turn(const Observation& observation) {
    if (observation.history.empty() || observation.history.back().role != Role::Teacher) {
        throw BackendError("synthetic student: observation must end with a teacher utterance");
    }
    if (observation.history.size() == 1) {
        // Fresh episode: first attempt.
        answered_correct_ = rng_.chance(params_.initial_accuracy);
    } else if (!answered_correct_) {
        answered_correct_ = rng_.chance(params_.plasticity);
    }
    return "FINAL ANSWER: " + (answered_correct_ ? correct_ : wrong_);
}

std::string SyntheticStudentBackend::next_teacher_turn(const DialogueState&) {
    throw BackendError("synthetic student cannot act as a teacher");
}
std::string SyntheticStudentBackend::next_critique_turn(const Observation& observation) {
    // Self-critique has no privileged access; a canned nudge is all the
    // synthetic model can offer.
    if (observation.history.empty() || observation.history.back().role != Role::Student) {
        throw BackendError("synthetic student: critique requires a student utterance last");
    }
    return kBuiltinHints[rng_.below(kBuiltinHints.size())];
}
std::string SyntheticStudentBackend::complete(const std::string&) {
    throw BackendError("synthetic student cannot complete free-form prompts");
}

SyntheticTeacherBackend::SyntheticTeacherBackend(SyntheticTeacherParams params)
    : params_(std::move(params)), rng_(params_.seed) {
    if (params_.leak_probability < 0.0 || params_.leak_probability > 1.0) {
        throw std::invalid_argument("synthetic teacher: q must lie in [0, 1]");
    }
}

std::string SyntheticTeacherBackend::hint() {
    if (!params_.hint_template.empty()) {
        return params_.hint_template;
    }
    return kBuiltinHints[rng_.below(kBuiltinHints.size())];
}

std::string SyntheticTeacherBackend::next_teacher_turn(const DialogueState& state) {
    std::string feedback = hint();
    if (rng_.chance(params_.leak_probability)) {
        feedback += " The answer is " + privileged_payload_text(state.privileged) + ".";
    }
    return feedback;
}

std::string SyntheticTeacherBackend::next_critique_turn(const Observation&) { return hint(); }

std::string SyntheticTeacherBackend::next_student_turn(const Observation&) {
    throw BackendError("synthetic teacher cannot act as a student");
}
std::string SyntheticTeacherBackend::complete(const std::string&) {
    throw BackendError("synthetic teacher cannot complete free-form prompts");
}

std::string privileged_payload_text(const PrivilegedInfo& privileged) {
    if (privileged.kind() == PrivilegedKind::GroundTruthAnswer) {
        return privileged.ground_truth();
    }
    std::string text;
    for (const auto& test : privileged.tests()) {
        if (!text.empty()) {
            text += "\n";
        }
        text += "input: " + test.input + " -> expected output: " + test.expected;
    }
    return text;
}

const std::string& teacher_prompt_template() {
    static const std::string kTemplate =
        "You are a teacher helping a student solve a problem. You know the\n"
        "privileged information below; the student does not.\n"
        "\n"
        "Privileged information:\n"
        "{privileged}\n"
        "\n"
        "The student's latest attempt is incorrect. Point out where the\n"
        "reasoning goes wrong and guide the student toward the solution\n"
        "without revealing the final answer.\n";
    return kTemplate;
}

const std::string& critique_prompt_template() {
    static const std::string kTemplate =
        "Review the conversation so far. The latest attempt at the problem\n"
        "is incorrect. Acting as your own critic, identify the most likely\n"
        "flaw in the reasoning and suggest how to revise the next attempt.\n"
        "You do not know the correct answer; rely only on the attempts above.\n";
    return kTemplate;
}

std::vector<ChatMessage> student_messages(const Observation& observation) {
    std::vector<ChatMessage> messages;
    messages.reserve(observation.history.size());
    for (const auto& utterance : observation.history) {
        messages.push_back(ChatMessage{
            utterance.role == Role::Teacher ? "user" : "assistant", utterance.text});
    }
    return messages;
}

std::vector<ChatMessage> teacher_messages(const DialogueState& state,
                                          const std::string& system_template) {
    std::vector<ChatMessage> messages;
    messages.reserve(state.observation.history.size() + 1);
    messages.push_back(ChatMessage{
        "system", replace_placeholder(system_template, "{privileged}",
                                      privileged_payload_text(state.privileged))});
    for (const auto& utterance : state.observation.history) {
        messages.push_back(ChatMessage{
            utterance.role == Role::Student ? "user" : "assistant", utterance.text});
    }
    return messages;
}

std::vector<ChatMessage> critique_messages(const Observation& observation,
                                           const std::string& system_template) {
    std::vector<ChatMessage> messages;
    messages.reserve(observation.history.size() + 1);
    messages.push_back(ChatMessage{"system", system_template});
    for (const auto& utterance : observation.history) {
        messages.push_back(ChatMessage{
            utterance.role == Role::Student ? "user" : "assistant", utterance.text});
    }
    return messages;
}

std::string build_chat_request(const EndpointConfig& endpoint,
                               const std::vector<ChatMessage>& messages) {
    nlohmann::json body;
    body["model"] = endpoint.model;
    body["temperature"] = endpoint.temperature;
    auto& list = body["messages"] = nlohmann::json::array();
    for (const auto& message : messages) {
        list.push_back({{"role", message.role}, {"content", message.content}});
    }
    return body.dump();
}

namespace {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw BackendError("remote chat: endpoint url must include a scheme: " + url);
    }
    const size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return SplitUrl{url, "/"};
    }
    return SplitUrl{url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

std::string remote_chat(const EndpointConfig& endpoint, const std::vector<ChatMessage>& messages) {
    if (endpoint.url.empty()) {
        throw BackendError("remote chat: endpoint url is not configured");
    }
    const SplitUrl url = split_url(endpoint.url);
    const std::string body = build_chat_request(endpoint, messages);

    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key != nullptr && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    std::string last_error;
    const int attempts = endpoint.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && endpoint.backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(endpoint.backoff_ms * attempt));
        }
        httplib::Client client(url.base);
        client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
        client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
        client.set_write_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);

        auto result = client.Post(url.path, headers, body, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            last_error = "http status " + std::to_string(result->status);
            continue;
        }
        try {
            const auto reply = nlohmann::json::parse(result->body);
            const auto& text = reply.at(nlohmann::json::json_pointer(endpoint.reply_path));
            if (!text.is_string()) {
                last_error = "malformed reply: " + endpoint.reply_path + " is not a string";
                continue;
            }
            return text.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed reply: ") + e.what();
            continue;
        }
    }
    throw BackendError("remote chat failed after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

RemoteChatBackend::RemoteChatBackend(EndpointConfig endpoint)
    : RemoteChatBackend(std::move(endpoint), teacher_prompt_template(), critique_prompt_template()) {}

RemoteChatBackend::RemoteChatBackend(EndpointConfig endpoint, std::string teacher_template,
                                     std::string critique_template)
    : endpoint_(std::move(endpoint)), teacher_template_(std::move(teacher_template)),
      critique_template_(std::move(critique_template)) {}

std::string RemoteChatBackend::next_student_turn(const Observation& observation) {
    return remote_chat(endpoint_, student_messages(observation));
}

std::string RemoteChatBackend::next_teacher_turn(const DialogueState& state) {
    return remote_chat(endpoint_, teacher_messages(state, teacher_template_));
}

std::string RemoteChatBackend::next_critique_turn(const Observation& observation) {
    return remote_chat(endpoint_, critique_messages(observation, critique_template_));
}

std::string RemoteChatBackend::complete(const std::string& prompt) {
    return remote_chat(endpoint_, {ChatMessage{"user", prompt}});
}

} // namespace didact
