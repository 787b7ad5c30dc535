#pragma once

#include <string>
#include <vector>

#include "didact/dialogue.hpp"
#include "didact/leak_flag.hpp"

namespace didact {

class AgentBackend;

// Stage-one audit: flags when the normalized ground truth (length >= 3
// after normalization) appears as a substring of the normalized teacher
// text, or when a numeric ground truth matches any numeric literal in the
// text within relative 1e-9. Program-output tasks audit each expected
// output the same way.
LeakFlag detect_leakage(const std::string& teacher_text, const PrivilegedInfo& privileged);

// Stage-two audit through a configured backend. The reply must start with
// YES or NO; anything else is logged and treated as not flagged. Backend
// failure degrades to not-flagged with evidence "judge-unavailable" —
// auditing never blocks a run.
LeakFlag judge_hook(const std::string& question, const std::string& ground_truth,
                    const std::string& teacher_text, AgentBackend& backend);
LeakFlag judge_hook(const std::string& question, const std::string& ground_truth,
                    const std::string& teacher_text, AgentBackend& backend,
                    const std::string& prompt_template);

// Built-in copy of assets/judge_prompt.txt. Placeholders: {question},
// {ground_truth}, {teacher_text}.
const std::string& judge_prompt_template();

std::string render_judge_prompt(const std::string& prompt_template, const std::string& question,
                                const std::string& ground_truth, const std::string& teacher_text);

// Flagged fraction; 0 on empty input.
double leakage_rate(const std::vector<LeakFlag>& flags);

} // namespace didact
