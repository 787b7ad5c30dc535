#include "didact/store.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace didact {

namespace {

uint64_t fnv1a64(std::string_view text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

Role role_from_string(const std::string& text) {
    if (text == "teacher") return Role::Teacher;
    if (text == "student") return Role::Student;
    throw std::runtime_error("unknown role: " + text);
}

VerifyMethod method_from_string(const std::string& text) {
    if (text == "exact_string") return VerifyMethod::ExactString;
    if (text == "numeric_tolerance") return VerifyMethod::NumericTolerance;
    if (text == "expression_sampling") return VerifyMethod::ExpressionSampling;
    if (text == "program_outputs") return VerifyMethod::ProgramOutputs;
    throw std::runtime_error("unknown verify method: " + text);
}

LeakStage stage_from_string(const std::string& text) {
    if (text == "none") return LeakStage::None;
    if (text == "string_match") return LeakStage::StringMatch;
    if (text == "judge") return LeakStage::Judge;
    throw std::runtime_error("unknown leak stage: " + text);
}

EpisodeMode mode_from_string(const std::string& text) {
    if (text == "didactic") return EpisodeMode::Didactic;
    if (text == "single_turn") return EpisodeMode::SingleTurn;
    if (text == "autodidact") return EpisodeMode::Autodidact;
    throw std::runtime_error("unknown episode mode: " + text);
}

TerminationKind termination_from_string(const std::string& text) {
    if (text == "pending") return TerminationKind::Pending;
    if (text == "solved_at_turn") return TerminationKind::SolvedAtTurn;
    if (text == "exhausted_turns") return TerminationKind::ExhaustedTurns;
    if (text == "backend_error") return TerminationKind::BackendError;
    throw std::runtime_error("unknown termination kind: " + text);
}

nlohmann::json privileged_to_json(const PrivilegedInfo& privileged) {
    nlohmann::json j;
    if (privileged.kind() == PrivilegedKind::GroundTruthAnswer) {
        j["kind"] = "answer";
        j["answer"] = privileged.ground_truth();
    } else {
        j["kind"] = "tests";
        auto& tests = j["tests"] = nlohmann::json::array();
        for (const auto& test : privileged.tests()) {
            tests.push_back({{"input", test.input}, {"expected", test.expected}});
        }
    }
    return j;
}

PrivilegedInfo privileged_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "answer") {
        return PrivilegedInfo::answer(j.at("answer").get<std::string>());
    }
    if (kind == "tests") {
        std::vector<TestCase> tests;
        for (const auto& test : j.at("tests")) {
            tests.push_back(TestCase{test.at("input").get<std::string>(),
                                     test.at("expected").get<std::string>()});
        }
        return PrivilegedInfo::program_outputs(std::move(tests));
    }
    throw std::runtime_error("unknown privileged kind: " + kind);
}

} // namespace

nlohmann::json observation_to_json(const Observation& observation) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& utterance : observation.history) {
        list.push_back({{"role", to_string(utterance.role)},
                        {"text", utterance.text},
                        {"turn", utterance.turn_index}});
    }
    return list;
}

nlohmann::json episode_to_json(const EpisodeRecord& episode) {
    nlohmann::json j;
    j["schema_version"] = kStoreSchemaVersion;
    j["problem_id"] = episode.problem_id;
    j["problem_text"] = episode.problem_text;
    j["privileged"] = privileged_to_json(episode.privileged);
    j["config"] = {{"max_turns", episode.config.max_turns},
                   {"seed", episode.config.seed},
                   {"feedback_after_final_failure", episode.config.feedback_after_final_failure}};
    j["mode"] = to_string(episode.mode);
    j["utterances"] = observation_to_json(Observation{episode.utterances});
    auto& verdicts = j["verdicts"] = nlohmann::json::array();
    for (const auto& verdict : episode.verdicts) {
        verdicts.push_back({{"correct", verdict.correct},
                            {"method", to_string(verdict.method)},
                            {"detail", verdict.detail}});
    }
    auto& flags = j["leak_flags"] = nlohmann::json::array();
    for (const auto& flag : episode.leak_flags) {
        flags.push_back({{"flagged", flag.flagged},
                         {"stage", to_string(flag.stage)},
                         {"evidence", flag.evidence}});
    }
    j["reward"] = episode.reward;
    j["termination"] = {{"kind", to_string(episode.termination.kind)},
                        {"turn", episode.termination.turn},
                        {"detail", episode.termination.detail}};
    return j;
}

EpisodeRecord episode_from_json(const nlohmann::json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kStoreSchemaVersion) {
        throw std::runtime_error("unsupported schema_version " + std::to_string(version));
    }
    EpisodeRecord episode;
    episode.problem_id = j.at("problem_id").get<std::string>();
    episode.problem_text = j.at("problem_text").get<std::string>();
    episode.privileged = privileged_from_json(j.at("privileged"));
    const auto& config = j.at("config");
    episode.config.max_turns = config.at("max_turns").get<int>();
    episode.config.seed = config.at("seed").get<uint64_t>();
    episode.config.feedback_after_final_failure =
        config.at("feedback_after_final_failure").get<bool>();
    episode.mode = mode_from_string(j.at("mode").get<std::string>());
    for (const auto& u : j.at("utterances")) {
        episode.utterances.push_back(Utterance{role_from_string(u.at("role").get<std::string>()),
                                               u.at("text").get<std::string>(),
                                               u.at("turn").get<int>()});
    }
    for (const auto& v : j.at("verdicts")) {
        episode.verdicts.push_back(Verdict{v.at("correct").get<bool>(),
                                           method_from_string(v.at("method").get<std::string>()),
                                           v.at("detail").get<std::string>()});
    }
    for (const auto& f : j.at("leak_flags")) {
        episode.leak_flags.push_back(LeakFlag{f.at("flagged").get<bool>(),
                                              stage_from_string(f.at("stage").get<std::string>()),
                                              f.at("evidence").get<std::string>()});
    }
    episode.reward = j.at("reward").get<int>();
    const auto& termination = j.at("termination");
    episode.termination.kind = termination_from_string(termination.at("kind").get<std::string>());
    episode.termination.turn = termination.at("turn").get<int>();
    episode.termination.detail = termination.at("detail").get<std::string>();
    return episode;
}

TrajectoryStore::TrajectoryStore(std::string path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        for (const auto& stored : load(path_)) {
            ids_.insert(stored.id);
        }
    }
}

std::string TrajectoryStore::record(const EpisodeRecord& episode) {
    if (!episode.terminated()) {
        throw std::invalid_argument("store: episode must be terminated before recording");
    }
    const std::string payload = episode_to_json(episode).dump();
    const std::string id = episode.problem_id + "-" + hex64(fnv1a64(payload));
    if (ids_.count(id) != 0) {
        throw std::runtime_error("store: duplicate episode id " + id);
    }
    nlohmann::json line;
    line["id"] = id;
    line["checksum"] = hex64(fnv1a64(payload));
    line["record"] = nlohmann::json::parse(payload);
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw std::runtime_error("store: cannot open " + path_ + " for append");
    }
    out << line.dump() << "\n";
    out.flush();
    if (!out) {
        throw std::runtime_error("store: write to " + path_ + " failed");
    }
    ids_.insert(id);
    return id;
}

std::vector<StoredEpisode> TrajectoryStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("store: cannot open " + path);
    }
    std::vector<StoredEpisode> episodes;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("store: " + path + ":" + std::to_string(line_number) +
                                     ": corrupt line (partial write?): " + e.what());
        }
        const std::string payload = parsed.at("record").dump();
        if (parsed.at("checksum").get<std::string>() != hex64(fnv1a64(payload))) {
            throw std::runtime_error("store: " + path + ":" + std::to_string(line_number) +
                                     ": checksum mismatch");
        }
        episodes.push_back(StoredEpisode{parsed.at("id").get<std::string>(),
                                         episode_from_json(parsed.at("record"))});
    }
    return episodes;
}

std::vector<TrainingExample> export_view(const std::vector<StoredEpisode>& episodes,
                                         ExportView view, const EpisodeFilter& filter) {
    std::vector<TrainingExample> examples;
    for (const auto& stored : episodes) {
        if (filter && !filter(stored)) {
            continue;
        }
        const EpisodeRecord& record = stored.record;
        for (size_t i = 0; i < record.utterances.size(); ++i) {
            const Utterance& utterance = record.utterances[i];
            const bool student_target = utterance.role == Role::Student;
            const bool teacher_target = view == ExportView::WorldModelView &&
                                        utterance.role == Role::Teacher && utterance.turn_index > 0;
            if (!student_target && !teacher_target) {
                continue;
            }
            TrainingExample example;
            example.episode_id = stored.id;
            example.turn_index = utterance.turn_index;
            example.target_role = utterance.role;
            example.target = utterance.text;
            example.reward = record.reward;
            example.context.reserve(i);
            for (size_t k = 0; k < i; ++k) {
                example.context.emplace_back(to_string(record.utterances[k].role),
                                             record.utterances[k].text);
            }
            examples.push_back(std::move(example));
        }
    }
    return examples;
}

nlohmann::json training_example_to_json(const TrainingExample& example) {
    nlohmann::json j;
    j["episode_id"] = example.episode_id;
    j["turn_index"] = example.turn_index;
    j["target_role"] = to_string(example.target_role);
    auto& context = j["context"] = nlohmann::json::array();
    for (const auto& [role, text] : example.context) {
        context.push_back({{"role", role}, {"text", text}});
    }
    j["target"] = example.target;
    j["reward"] = example.reward;
    return j;
}

void write_training_file(const std::vector<TrainingExample>& examples, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open export file: " + path);
    }
    for (const auto& example : examples) {
        out << training_example_to_json(example).dump() << "\n";
    }
    if (!out) {
        throw std::runtime_error("write to export file failed: " + path);
    }
}

void export_student_view(const std::vector<StoredEpisode>& episodes, const std::string& path,
                         const EpisodeFilter& filter) {
    write_training_file(export_view(episodes, ExportView::StudentView, filter), path);
}

void export_worldmodel_view(const std::vector<StoredEpisode>& episodes, const std::string& path,
                            const EpisodeFilter& filter) {
    write_training_file(export_view(episodes, ExportView::WorldModelView, filter), path);
}

} // namespace didact
