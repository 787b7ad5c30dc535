#include "didact/leakage.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "didact/agents.hpp"
#include "didact/util.hpp"
#include "didact/verify.hpp"

namespace didact {

namespace {

bool numbers_match(double literal, double truth) {
    const double scale = std::max(std::fabs(literal), std::fabs(truth));
    return std::fabs(literal - truth) <= 1e-9 * scale;
}

// Numeric literals embedded in prose. Digits glued to an identifier
// ("x2", "f_3") are not literals; a directly preceding '-' is taken in
// addition to the bare value.
std::vector<std::pair<double, std::string>> scan_numeric_literals(const std::string& text) {
    std::vector<std::pair<double, std::string>> literals;
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        const bool digit_start =
            std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])));
        if (!digit_start) {
            ++i;
            continue;
        }
        if (i > 0) {
            const char prev = text[i - 1];
            if (std::isalnum(static_cast<unsigned char>(prev)) || prev == '_' || prev == '.') {
                ++i;
                while (i < text.size() &&
                       (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
                    ++i;
                }
                continue;
            }
        }
        char* end = nullptr;
        const double value = std::strtod(text.c_str() + i, &end);
        const size_t length = static_cast<size_t>(end - (text.c_str() + i));
        if (length == 0) {
            ++i;
            continue;
        }
        const std::string span = text.substr(i, length);
        if (std::isfinite(value)) {
            literals.emplace_back(value, span);
            if (i > 0 && text[i - 1] == '-') {
                literals.emplace_back(-value, "-" + span);
            }
        }
        i += length;
    }
    return literals;
}

LeakFlag check_needle(const std::string& normalized_text, const std::string& teacher_text,
                      const std::string& needle) {
    const std::string normalized_needle = normalize_answer(needle);
    if (normalized_needle.size() >= 3 &&
        normalized_text.find(normalized_needle) != std::string::npos) {
        return LeakFlag{true, LeakStage::StringMatch, normalized_needle};
    }
    if (const auto truth_number = parse_plain_number(needle)) {
        for (const auto& [value, span] : scan_numeric_literals(teacher_text)) {
            if (numbers_match(value, *truth_number)) {
                return LeakFlag{true, LeakStage::StringMatch, span};
            }
        }
    }
    return LeakFlag{};
}

std::string first_word(const std::string& text) {
    size_t begin = 0;
    while (begin < text.size() && !std::isalpha(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    size_t end = begin;
    while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) {
        ++end;
    }
    return text.substr(begin, end - begin);
}

std::string replace_placeholder(std::string text, const std::string& key, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

} // namespace

LeakFlag detect_leakage(const std::string& teacher_text, const PrivilegedInfo& privileged) {
    const std::string normalized_text = normalize_answer(teacher_text);
    if (privileged.kind() == PrivilegedKind::GroundTruthAnswer) {
        return check_needle(normalized_text, teacher_text, privileged.ground_truth());
    }
    for (const auto& test : privileged.tests()) {
        LeakFlag flag = check_needle(normalized_text, teacher_text, test.expected);
        if (flag.flagged) {
            return flag;
        }
    }
    return LeakFlag{};
}

const std::string& judge_prompt_template() {
    static const std::string kTemplate =
        "You are auditing a teacher's feedback for answer leakage.\n"
        "\n"
        "Question:\n"
        "{question}\n"
        "\n"
        "Ground-truth solution:\n"
        "{ground_truth}\n"
        "\n"
        "Teacher feedback:\n"
        "{teacher_text}\n"
        "\n"
        "Did the teacher feedback reveal the ground-truth solution? Reply with\n"
        "YES or NO as the very first word, then a short justification.\n";
    return kTemplate;
}

std::string render_judge_prompt(const std::string& prompt_template, const std::string& question,
                                const std::string& ground_truth, const std::string& teacher_text) {
    std::string prompt = replace_placeholder(prompt_template, "{question}", question);
    prompt = replace_placeholder(std::move(prompt), "{ground_truth}", ground_truth);
    return replace_placeholder(std::move(prompt), "{teacher_text}", teacher_text);
}

LeakFlag judge_hook(const std::string& question, const std::string& ground_truth,
                    const std::string& teacher_text, AgentBackend& backend) {
    return judge_hook(question, ground_truth, teacher_text, backend, judge_prompt_template());
}

LeakFlag judge_hook(const std::string& question, const std::string& ground_truth,
                    const std::string& teacher_text, AgentBackend& backend,
                    const std::string& prompt_template) {
    std::string reply;
    try {
        reply = backend.complete(
            render_judge_prompt(prompt_template, question, ground_truth, teacher_text));
    } catch (const std::exception& e) {
        log_warn(std::string("judge backend unavailable, leakage audit degraded: ") + e.what());
        return LeakFlag{false, LeakStage::None, "judge-unavailable"};
    }
    const std::string word = first_word(reply);
    if (word == "YES") {
        return LeakFlag{true, LeakStage::Judge, reply};
    }
    if (word == "NO") {
        return LeakFlag{};
    }
    log_warn("judge reply did not start with YES or NO: \"" + reply + "\"");
    return LeakFlag{};
}

double leakage_rate(const std::vector<LeakFlag>& flags) {
    if (flags.empty()) {
        return 0.0;
    }
    size_t flagged = 0;
    for (const auto& flag : flags) {
        if (flag.flagged) {
            ++flagged;
        }
    }
    return static_cast<double>(flagged) / static_cast<double>(flags.size());
}

} // namespace didact
