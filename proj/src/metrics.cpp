#include "didact/metrics.hpp"

#include <cassert>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace didact {

CumulativeAccuracyCurve cumulative_accuracy(const std::vector<EpisodeRecord>& records,
                                            int max_turns) {
    if (records.empty()) {
        throw std::invalid_argument("cumulative_accuracy: no records");
    }
    if (max_turns < 1) {
        throw std::invalid_argument("cumulative_accuracy: max_turns must be >= 1");
    }
    std::vector<size_t> solved_at(static_cast<size_t>(max_turns) + 1, 0);
    for (const auto& record : records) {
        if (record.termination.kind == TerminationKind::SolvedAtTurn &&
            record.termination.turn >= 1 && record.termination.turn <= max_turns) {
            ++solved_at[static_cast<size_t>(record.termination.turn)];
        }
    }
    CumulativeAccuracyCurve curve;
    curve.denominator = records.size();
    curve.values.reserve(static_cast<size_t>(max_turns));
    size_t cumulative = 0;
    for (int t = 1; t <= max_turns; ++t) {
        cumulative += solved_at[static_cast<size_t>(t)];
        curve.values.push_back(static_cast<double>(cumulative) /
                               static_cast<double>(records.size()));
    }
    for (size_t i = 1; i < curve.values.size(); ++i) {
        assert(curve.values[i] >= curve.values[i - 1]);
    }
    return curve;
}

std::string csv_text(const std::vector<std::pair<std::string, CumulativeAccuracyCurve>>& curves) {
    if (curves.empty()) {
        throw std::invalid_argument("csv: curve list must be non-empty");
    }
    const size_t turns = curves.front().second.values.size();
    for (const auto& [name, curve] : curves) {
        if (name.empty()) {
            throw std::invalid_argument("csv: curve names must be non-empty");
        }
        if (curve.values.size() != turns) {
            throw std::invalid_argument("csv: curves must share a turn count");
        }
    }
    std::string text = "turn";
    for (const auto& [name, curve] : curves) {
        text += "," + name;
    }
    text += "\n";
    char buffer[32];
    for (size_t t = 0; t < turns; ++t) {
        text += std::to_string(t + 1);
        for (const auto& [name, curve] : curves) {
            std::snprintf(buffer, sizeof(buffer), ",%.6f", curve.values[t]);
            text += buffer;
        }
        text += "\n";
    }
    return text;
}

void emit_csv(const std::vector<std::pair<std::string, CumulativeAccuracyCurve>>& curves,
              const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open csv file: " + path);
    }
    out << csv_text(curves);
    if (!out) {
        throw std::runtime_error("write to csv file failed: " + path);
    }
}

LeakageReport leakage_report(const std::vector<EpisodeRecord>& records) {
    LeakageReport report;
    for (const auto& record : records) {
        bool any = false;
        for (const auto& flag : record.leak_flags) {
            ++report.total_turns;
            if (flag.flagged) {
                ++report.flagged_turns;
                any = true;
            }
        }
        if (any) {
            report.flagged_episode_ids.push_back(record.problem_id);
        }
    }
    report.rate = report.total_turns == 0
                      ? 0.0
                      : static_cast<double>(report.flagged_turns) /
                            static_cast<double>(report.total_turns);
    return report;
}

} // namespace didact
