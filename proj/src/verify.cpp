#include "didact/verify.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "didact/util.hpp"

namespace didact {

namespace {

std::string trim(const std::string& text) {
    size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    lines.push_back(current);
    return lines;
}

bool is_fence(const std::string& line) {
    return trim(line).rfind("```", 0) == 0;
}

constexpr const char* kFinalAnswerMarker = "FINAL ANSWER:";

// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_program_output(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

Verdict verify_ground_truth(const std::string& answer_text, const std::string& ground_truth,
                            const EquivalencePolicy& policy) {
    std::string extracted;
    try {
        extracted = extract_final_answer(answer_text);
    } catch (const std::exception&) {
        return Verdict{false, VerifyMethod::ExactString, "no extractable answer"};
    }

    if (normalize_answer(extracted) == normalize_answer(ground_truth)) {
        return Verdict{true, VerifyMethod::ExactString, "normalized strings match"};
    }

    const auto answer_number = parse_plain_number(extracted);
    const auto truth_number = parse_plain_number(ground_truth);
    if (answer_number && truth_number) {
        const bool ok = within_tolerance(*answer_number, *truth_number, policy);
        std::ostringstream detail;
        detail << "numeric comparison: " << *answer_number << " vs " << *truth_number;
        return Verdict{ok, VerifyMethod::NumericTolerance, detail.str()};
    }

    switch (expressions_equivalent(extracted, ground_truth, policy)) {
    case Equivalence::Equivalent:
        return Verdict{true, VerifyMethod::ExpressionSampling,
                       "agreement at " + std::to_string(policy.sample_count) + " sampled points"};
    case Equivalence::Different:
        return Verdict{false, VerifyMethod::ExpressionSampling,
                       "mismatch under sampling or string fallback"};
    case Equivalence::Indeterminate:
        return Verdict{false, VerifyMethod::ExpressionSampling,
                       "indeterminate: no singularity-free sample points found"};
    }
    return Verdict{false, VerifyMethod::ExpressionSampling, "unreachable"};
}

Verdict verify_program_outputs(const std::string& answer_text, const PrivilegedInfo& privileged,
                               ProgramRunner* runner) {
    if (runner == nullptr) {
        return Verdict{false, VerifyMethod::ProgramOutputs, "no program runner configured"};
    }
    std::string program;
    try {
        program = extract_final_answer(answer_text);
    } catch (const std::exception&) {
        return Verdict{false, VerifyMethod::ProgramOutputs, "no extractable program"};
    }

    const auto& tests = privileged.tests();
    for (size_t i = 0; i < tests.size(); ++i) {
        RunOutcome outcome = runner->run(program, tests[i].input);
        if (outcome.status != RunOutcome::Status::Completed) {
            return Verdict{false, VerifyMethod::ProgramOutputs,
                           "test " + std::to_string(i + 1) + ": " + outcome.error};
        }
        if (outcome.exit_code != 0) {
            return Verdict{false, VerifyMethod::ProgramOutputs,
                           "test " + std::to_string(i + 1) + ": exit code " +
                               std::to_string(outcome.exit_code)};
        }
        const std::string actual = normalize_program_output(outcome.stdout_text);
        const std::string expected = normalize_program_output(tests[i].expected);
        if (actual != expected) {
            return Verdict{false, VerifyMethod::ProgramOutputs,
                           "test " + std::to_string(i + 1) + ": expected \"" + expected +
                               "\", got \"" + actual + "\""};
        }
    }
    return Verdict{true, VerifyMethod::ProgramOutputs,
                   "all " + std::to_string(tests.size()) + " tests passed"};
}

} // namespace

std::string extract_final_answer(const std::string& text) {
    if (text.empty()) {
        throw std::invalid_argument("extract_final_answer: empty text");
    }

    const std::vector<std::string> lines = split_lines(text);

    // Last complete fenced code block.
    std::vector<std::string> block;
    std::vector<std::string> last_block;
    bool in_block = false;
    bool have_block = false;
    for (const auto& line : lines) {
        if (is_fence(line)) {
            if (in_block) {
                last_block = block;
                have_block = true;
            }
            block.clear();
            in_block = !in_block;
            continue;
        }
        if (in_block) {
            block.push_back(line);
        }
    }
    if (have_block) {
        std::string joined;
        for (size_t i = 0; i < last_block.size(); ++i) {
            if (i > 0) {
                joined.push_back('\n');
            }
            joined += last_block[i];
        }
        return trim(joined);
    }

    // Last "FINAL ANSWER:" line.
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const std::string stripped = trim(*it);
        if (stripped.rfind(kFinalAnswerMarker, 0) == 0) {
            return trim(stripped.substr(std::string(kFinalAnswerMarker).size()));
        }
    }

    // Last non-empty line.
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        const std::string stripped = trim(*it);
        if (!stripped.empty()) {
            return stripped;
        }
    }
    throw std::invalid_argument("extract_final_answer: no extractable answer");
}

bool within_tolerance(double a, double b, const EquivalencePolicy& policy) {
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= policy.absolute_tolerance + policy.relative_tolerance * scale;
}

std::optional<double> parse_plain_number(const std::string& text) {
    const std::string stripped = trim(text);
    if (stripped.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    const double value = std::strtod(stripped.c_str(), &end);
    if (end != stripped.c_str() + stripped.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

Equivalence expressions_equivalent(const std::string& a, const std::string& b,
                                   const EquivalencePolicy& policy) {
    ExprPtr lhs;
    ExprPtr rhs;
    try {
        lhs = lowercase_variables(parse_expression(a));
        rhs = lowercase_variables(parse_expression(b));
    } catch (const ParseError&) {
        return normalize_answer(a) == normalize_answer(b) ? Equivalence::Equivalent
                                                          : Equivalence::Different;
    }

    const auto lhs_vars = free_variables(lhs);
    const auto rhs_vars = free_variables(rhs);
    if (lhs_vars != rhs_vars) {
        return Equivalence::Different;
    }

    Rng rng(policy.seed);
    int accepted = 0;
    int resamples = 0;
    while (accepted < policy.sample_count) {
        Assignment assignment;
        for (const auto& name : lhs_vars) {
            assignment[name] = rng.uniform(policy.domain_lo, policy.domain_hi);
        }
        const auto lhs_value = eval_expression(lhs, assignment);
        const auto rhs_value = eval_expression(rhs, assignment);
        if (!lhs_value || !rhs_value) {
            if (++resamples > policy.max_resamples_on_singularity) {
                return Equivalence::Indeterminate;
            }
            continue;
        }
        if (!within_tolerance(*lhs_value, *rhs_value, policy)) {
            return Equivalence::Different;
        }
        ++accepted;
    }
    return Equivalence::Equivalent;
}

Verdict verify(const std::string& answer_text, const PrivilegedInfo& privileged,
               const EquivalencePolicy& policy, ProgramRunner* runner) {
    if (privileged.kind() == PrivilegedKind::ExpectedProgramOutputs) {
        return verify_program_outputs(answer_text, privileged, runner);
    }
    return verify_ground_truth(answer_text, privileged.ground_truth(), policy);
}

} // namespace didact
