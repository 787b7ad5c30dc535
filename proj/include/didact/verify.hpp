#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "didact/dialogue.hpp"
#include "didact/expr.hpp"

namespace didact {

struct EquivalencePolicy {
    int sample_count = 32;
    double domain_lo = 0.2; // per-variable sampling interval, poles at small
    double domain_hi = 2.0; // integers and the origin stay outside it
    double relative_tolerance = 1e-9;
    double absolute_tolerance = 1e-12;
    int max_resamples_on_singularity = 100;
    uint64_t seed = 0;
};

enum class Equivalence { Equivalent, Different, Indeterminate };

// Content of the last fenced code block; else the text after the last line
// beginning "FINAL ANSWER:"; else the trimmed last non-empty line.
// Throws on empty (or all-whitespace) input.
std::string extract_final_answer(const std::string& text);

// Randomized-evaluation equivalence. Both sides must parse and bind the
// same variables (after lowercasing names); assignments are drawn uniformly
// from the policy domain, domain errors are resampled up to the cap.
// Parse failure of either side degrades to normalized-string comparison.
// Indeterminate means the resample budget ran out before sample_count
// valid points were found.
Equivalence expressions_equivalent(const std::string& a, const std::string& b,
                                   const EquivalencePolicy& policy);

bool within_tolerance(double a, double b, const EquivalencePolicy& policy);

// Whole-string numeric literal, or nullopt.
std::optional<double> parse_plain_number(const std::string& text);

struct RunOutcome {
    enum class Status { Completed, Timeout, Crashed, LaunchFailed };
    Status status = Status::Completed;
    int exit_code = 0;
    std::string stdout_text;
    std::string error;
};

// Executes candidate programs against hidden test inputs (stdin in,
// stdout out).
class ProgramRunner {
public:
    virtual ~ProgramRunner() = default;
    virtual RunOutcome run(const std::string& program, const std::string& input) = 0;
};

struct SubprocessRunnerConfig {
    // Shell command. "{program}" expands to the path of a file holding the
    // candidate program text.
    std::string command;
    int timeout_ms = 5000;
};

class SubprocessRunner final : public ProgramRunner {
public:
    explicit SubprocessRunner(SubprocessRunnerConfig config);
    RunOutcome run(const std::string& program, const std::string& input) override;

private:
    SubprocessRunnerConfig config_;
};

// Judges one answer against the privileged info. Ground-truth answers go
// through the cascade: exact normalized string, then plain-number
// comparison when both sides are numerals, then expression sampling.
// Program-output tasks run every test through the runner and require each
// whitespace-normalized output to equal the expected one. The raw student
// utterance is accepted; the final answer is extracted first.
Verdict verify(const std::string& answer_text, const PrivilegedInfo& privileged,
               const EquivalencePolicy& policy, ProgramRunner* runner = nullptr);

} // namespace didact
