#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "didact/dialogue.hpp"

namespace didact {

inline constexpr int kStoreSchemaVersion = 1;

nlohmann::json episode_to_json(const EpisodeRecord& episode);
EpisodeRecord episode_from_json(const nlohmann::json& value);
nlohmann::json observation_to_json(const Observation& observation);

struct StoredEpisode {
    std::string id;
    EpisodeRecord record;
};

// Append-only JSONL store of terminated episodes. Ids are content-derived
// (problem id + hash of the canonical record JSON): stable across runs,
// unique per distinct episode, duplicates rejected. Every line carries a
// checksum validated on load so partial writes are detected.
class TrajectoryStore {
public:
    explicit TrajectoryStore(std::string path);

    // Pre: episode.terminated(). Returns the assigned id.
    std::string record(const EpisodeRecord& episode);

    static std::vector<StoredEpisode> load(const std::string& path);

    const std::string& path() const { return path_; }
    size_t size() const { return ids_.size(); }

private:
    std::string path_;
    std::set<std::string> ids_;
};

// One serialized context -> target pair for RL/SFT export.
struct TrainingExample {
    std::string episode_id;
    int turn_index = 0;
    Role target_role = Role::Student;
    std::vector<std::pair<std::string, std::string>> context; // (role, text)
    std::string target;
    int reward = 0;
};

enum class ExportView { StudentView, WorldModelView };

using EpisodeFilter = std::function<bool(const StoredEpisode&)>;

// StudentView: one example per student turn, context = all prior
// utterances, the episode's terminal reward attached to every example.
// WorldModelView: the union of the student view and one example per
// teacher feedback turn (never the problem statement), whose context is
// the public observation only — privileged payloads are excluded by
// construction.
std::vector<TrainingExample> export_view(const std::vector<StoredEpisode>& episodes,
                                         ExportView view, const EpisodeFilter& filter = {});

nlohmann::json training_example_to_json(const TrainingExample& example);

void write_training_file(const std::vector<TrainingExample>& examples, const std::string& path);

void export_student_view(const std::vector<StoredEpisode>& episodes, const std::string& path,
                         const EpisodeFilter& filter = {});
void export_worldmodel_view(const std::vector<StoredEpisode>& episodes, const std::string& path,
                            const EpisodeFilter& filter = {});

} // namespace didact
