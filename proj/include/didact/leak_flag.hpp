#pragma once

#include <string>

namespace didact {

enum class LeakStage { None, StringMatch, Judge };

// Outcome of auditing one teacher utterance for ground-truth leakage.
// flagged implies stage != None and non-empty evidence.
struct LeakFlag {
    bool flagged = false;
    LeakStage stage = LeakStage::None;
    std::string evidence;
};

const char* to_string(LeakStage stage);

} // namespace didact
