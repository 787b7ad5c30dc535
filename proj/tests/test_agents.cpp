#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "didact/agents.hpp"
#include "didact/leakage.hpp"
#include "didact/orchestrator.hpp"
#include "didact/util.hpp"

using namespace didact;

namespace {

Observation fresh_observation(const std::string& problem = "solve it") {
    return Observation{{Utterance{Role::Teacher, problem, 0}}};
}

Observation after_feedback(const Observation& base, const std::string& answer,
                           const std::string& hint) {
    Observation observation = base;
    observation.history.push_back(Utterance{Role::Student, answer, 1});
    observation.history.push_back(Utterance{Role::Teacher, hint, 2});
    return observation;
}

// In-process chat endpoint; replies with the last message content and
// keeps every request body for inspection.
class FakeEndpoint {
public:
    explicit FakeEndpoint(int failures_before_success = 0, bool malformed = false)
        : failures_(failures_before_success), malformed_(malformed) {
        server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
            bodies_.push_back(req.body);
            if (auth_.empty()) {
                auto it = req.headers.find("Authorization");
                if (it != req.headers.end()) {
                    auth_ = it->second;
                }
            }
            ++hits_;
            if (failures_ > 0) {
                --failures_;
                res.status = 500;
                return;
            }
            if (malformed_) {
                res.set_content("{\"unexpected\":true}", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            const std::string last = body.at("messages").back().at("content").get<std::string>();
            nlohmann::json reply;
            reply["choices"][0]["message"]["content"] = "echo: " + last;
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    EndpointConfig endpoint() const {
        EndpointConfig config;
        config.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat";
        config.model = "fake-model";
        config.max_retries = 2;
        config.backoff_ms = 1;
        return config;
    }

    int hits() const { return hits_; }
    const std::vector<std::string>& bodies() const { return bodies_; }
    const std::string& auth() const { return auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    int failures_ = 0;
    bool malformed_ = false;
    std::vector<std::string> bodies_;
    std::string auth_;
};

} // namespace

TEST_SUITE_BEGIN("agents");

TEST_CASE("synthetic student with a0=1 answers correctly on turn one") {
    SyntheticStudentBackend student({1.0, 0.0, 9}, "42");
    CHECK(student.next_student_turn(fresh_observation()) == "FINAL ANSWER: 42");
}

TEST_CASE("synthetic student with a0=0, p=0 repeats its wrong answer verbatim") {
    SyntheticStudentBackend student({0.0, 0.0, 9}, "42");
    const auto obs = fresh_observation();
    const std::string first = student.next_student_turn(obs);
    CHECK(first == "FINAL ANSWER: WRONG_ANSWER");
    auto later = after_feedback(obs, first, "try again");
    CHECK(student.next_student_turn(later) == first);
    later = after_feedback(later, first, "still no");
    CHECK(student.next_student_turn(later) == first);
}

TEST_CASE("synthetic student with a0=0, p=1 switches to correct on turn two") {
    SyntheticStudentBackend student({0.0, 1.0, 9}, "42");
    const auto obs = fresh_observation();
    CHECK(student.next_student_turn(obs) == "FINAL ANSWER: WRONG_ANSWER");
    CHECK(student.next_student_turn(after_feedback(obs, "FINAL ANSWER: WRONG_ANSWER", "no")) ==
          "FINAL ANSWER: 42");
}

TEST_CASE("synthetic student resets per fresh observation") {
    SyntheticStudentBackend student({0.0, 1.0, 9}, "42");
    const auto obs = fresh_observation();
    CHECK(student.next_student_turn(obs) == "FINAL ANSWER: WRONG_ANSWER");
    CHECK(student.next_student_turn(after_feedback(obs, "x", "no")) == "FINAL ANSWER: 42");
    // New episode: back to the a0 draw (a0 = 0 means wrong again).
    CHECK(student.next_student_turn(fresh_observation("next problem")) ==
          "FINAL ANSWER: WRONG_ANSWER");
}

TEST_CASE("synthetic teacher with q=0 never trips the leakage audit") {
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        SyntheticTeacherBackend teacher({0.0, "", rng.below(1u << 31)});
        const std::string truth = "gtvalue" + std::to_string(rng.below(1u << 30)) + "z";
        DialogueState state{PrivilegedInfo::answer(truth), fresh_observation()};
        state.observation.history.push_back(Utterance{Role::Student, "FINAL ANSWER: nope", 1});
        const std::string feedback = teacher.next_teacher_turn(state);
        REQUIRE_FALSE(detect_leakage(feedback, state.privileged).flagged);
    }
}

TEST_CASE("synthetic teacher with q=1 always leaks and is always flagged") {
    SyntheticTeacherBackend teacher({1.0, "", 5});
    DialogueState state{PrivilegedInfo::answer("secret441"), fresh_observation()};
    for (int i = 0; i < 20; ++i) {
        const std::string feedback = teacher.next_teacher_turn(state);
        REQUIRE(detect_leakage(feedback, state.privileged).flagged);
    }
}

TEST_CASE("a scripted teacher replaying real feedback passes the audit") {
    ScriptedBackend teacher({"Your mistake lies in assuming that the constant of integration "
                             "immediately implied that the solution should tend to zero..."});
    DialogueState state{PrivilegedInfo::answer("1 + 1/((x-t)**(1/2))"), fresh_observation()};
    const std::string feedback = teacher.next_teacher_turn(state);
    CHECK_FALSE(detect_leakage(feedback, state.privileged).flagged);
}

TEST_CASE("scripted backends consume in order and error when exhausted") {
    ScriptedBackend backend({"one", "two"});
    CHECK(backend.next_student_turn(fresh_observation()) == "one");
    CHECK(backend.complete("anything") == "two");
    CHECK(backend.remaining() == 0);
    CHECK_THROWS_AS(backend.next_student_turn(fresh_observation()), BackendError);
}

TEST_CASE("student messages map roles without any system prompt") {
    auto obs = fresh_observation("problem?");
    obs.history.push_back(Utterance{Role::Student, "attempt", 1});
    obs.history.push_back(Utterance{Role::Teacher, "hint", 2});
    const auto messages = student_messages(obs);
    REQUIRE(messages.size() == 3);
    CHECK(messages[0].role == "user");
    CHECK(messages[1].role == "assistant");
    CHECK(messages[2].role == "user");
}

TEST_CASE("teacher messages invert roles and carry the privileged system prompt") {
    DialogueState state{PrivilegedInfo::answer("sekrit99"), fresh_observation("problem?")};
    state.observation.history.push_back(Utterance{Role::Student, "attempt", 1});
    const auto messages = teacher_messages(state, teacher_prompt_template());
    REQUIRE(messages.size() == 3);
    CHECK(messages[0].role == "system");
    CHECK(messages[0].content.find("sekrit99") != std::string::npos);
    CHECK(messages[1].role == "assistant"); // the problem statement, teacher side
    CHECK(messages[2].role == "user");      // the student attempt
}

TEST_CASE("critique messages carry no privileged content") {
    auto obs = fresh_observation("problem?");
    obs.history.push_back(Utterance{Role::Student, "attempt", 1});
    const auto messages = critique_messages(obs, critique_prompt_template());
    CHECK(messages[0].role == "system");
    for (const auto& message : messages) {
        CHECK(message.content.find("sekrit") == std::string::npos);
    }
}

TEST_CASE("request bodies keep the information asymmetry") {
    EndpointConfig endpoint;
    endpoint.model = "m";
    const std::string sentinel = "SENTINEL71ZXX";
    DialogueState state{PrivilegedInfo::answer(sentinel), fresh_observation()};
    state.observation.history.push_back(Utterance{Role::Student, "wrong one", 1});

    const std::string teacher_body =
        build_chat_request(endpoint, teacher_messages(state, teacher_prompt_template()));
    CHECK(teacher_body.find(sentinel) != std::string::npos);

    const std::string student_body =
        build_chat_request(endpoint, student_messages(state.observation));
    CHECK(student_body.find(sentinel) == std::string::npos);

    const std::string critique_body = build_chat_request(
        endpoint, critique_messages(state.observation, critique_prompt_template()));
    CHECK(critique_body.find(sentinel) == std::string::npos);
}

TEST_CASE("remote chat round-trips through a live endpoint") {
    FakeEndpoint fake;
    RemoteChatBackend backend(fake.endpoint());
    const std::string reply = backend.next_student_turn(fresh_observation("ping"));
    CHECK(reply == "echo: ping");
}

TEST_CASE("remote chat retries exactly max_retries times then fails") {
    FakeEndpoint always_failing(1000000);
    auto endpoint = always_failing.endpoint();
    endpoint.max_retries = 2;
    CHECK_THROWS_AS(remote_chat(endpoint, {{"user", "hello"}}), BackendError);
    CHECK(always_failing.hits() == 3); // 1 try + 2 retries
}

TEST_CASE("remote chat recovers when a retry succeeds") {
    FakeEndpoint flaky(2);
    const std::string reply = remote_chat(flaky.endpoint(), {{"user", "hi"}});
    CHECK(reply == "echo: hi");
    CHECK(flaky.hits() == 3);
}

TEST_CASE("malformed replies exhaust the retry budget") {
    FakeEndpoint malformed(0, true);
    auto endpoint = malformed.endpoint();
    endpoint.max_retries = 1;
    CHECK_THROWS_AS(remote_chat(endpoint, {{"user", "hi"}}), BackendError);
    CHECK(malformed.hits() == 2);
}

TEST_CASE("the api key travels as a bearer header") {
    FakeEndpoint fake;
    ::setenv("DIDACT_API_KEY", "k-123", 1);
    remote_chat(fake.endpoint(), {{"user", "hello"}});
    ::unsetenv("DIDACT_API_KEY");
    CHECK(fake.auth() == "Bearer k-123");
}

TEST_CASE("live teacher requests carry the payload, student requests never do") {
    FakeEndpoint fake;
    RemoteChatBackend backend(fake.endpoint());
    const std::string sentinel = "SENTINEL99Q";
    DialogueState state{PrivilegedInfo::answer(sentinel), fresh_observation()};
    state.observation.history.push_back(Utterance{Role::Student, "a try", 1});

    backend.next_teacher_turn(state);
    backend.next_student_turn(fresh_observation());
    backend.next_critique_turn(state.observation);

    REQUIRE(fake.bodies().size() == 3);
    CHECK(fake.bodies()[0].find(sentinel) != std::string::npos);
    CHECK(fake.bodies()[1].find(sentinel) == std::string::npos);
    CHECK(fake.bodies()[2].find(sentinel) == std::string::npos);
}

TEST_CASE("synthetic student cumulative solve rate follows the closed form") {
    const int episodes = 4000;
    const int max_turns = 4;
    const double a0 = 0.2;
    const double p = 0.5;
    EquivalencePolicy policy;
    std::vector<int> solved_at(max_turns + 1, 0);
    for (int i = 0; i < episodes; ++i) {
        Problem problem{"p", "guess", PrivilegedInfo::answer("42")};
        SyntheticStudentBackend student({a0, p, derive_seed(11, std::to_string(i))}, "42");
        SyntheticTeacherBackend teacher({0.0, "", derive_seed(12, std::to_string(i))});
        const auto record =
            run_episode(problem, student, teacher, EpisodeConfig{max_turns, 0, false}, policy);
        if (record.termination.kind == TerminationKind::SolvedAtTurn) {
            ++solved_at[record.termination.turn];
        }
    }
    double cumulative = 0.0;
    for (int t = 1; t <= max_turns; ++t) {
        cumulative += solved_at[t];
        const double expected = 1.0 - (1.0 - a0) * std::pow(1.0 - p, t - 1);
        CHECK(std::fabs(cumulative / episodes - expected) < 0.03);
    }
}

TEST_SUITE_END();
