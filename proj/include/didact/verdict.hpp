#pragma once

#include <string>

namespace didact {

enum class VerifyMethod { ExactString, NumericTolerance, ExpressionSampling, ProgramOutputs };

// Correctness judgment of one student answer against the privileged info.
struct Verdict {
    bool correct = false;
    VerifyMethod method = VerifyMethod::ExactString;
    std::string detail;
};

const char* to_string(VerifyMethod method);

} // namespace didact
