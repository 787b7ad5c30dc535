#pragma once

#include <string>
#include <utility>
#include <vector>

#include "didact/dialogue.hpp"

namespace didact {

// values[t-1] = fraction of episodes solved at or before student turn t.
// Non-decreasing by construction.
struct CumulativeAccuracyCurve {
    std::vector<double> values;
    size_t denominator = 0;
};

// BackendError episodes count in the denominator and never in the
// numerator. Throws on empty input or max_turns < 1.
CumulativeAccuracyCurve cumulative_accuracy(const std::vector<EpisodeRecord>& records,
                                            int max_turns);

// Header "turn,<name1>,<name2>,..."; one row per turn; six decimal places.
// All curves must share a length; an empty curve list is an error.
void emit_csv(const std::vector<std::pair<std::string, CumulativeAccuracyCurve>>& curves,
              const std::string& path);

std::string csv_text(const std::vector<std::pair<std::string, CumulativeAccuracyCurve>>& curves);

struct LeakageReport {
    double rate = 0.0;
    size_t flagged_turns = 0;
    size_t total_turns = 0;
    std::vector<std::string> flagged_episode_ids; // problem ids, store order
};

// Aggregates the leak flags stored on teacher feedback turns.
LeakageReport leakage_report(const std::vector<EpisodeRecord>& records);

} // namespace didact
