#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>

namespace didact {

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

enum class Builtin { Exp, Log, Sqrt, Abs };

struct Number {
    double value;
};
struct Variable {
    std::string name; // [a-zA-Z][a-zA-Z0-9_]*
};
struct Neg {
    ExprPtr child;
};
struct BinOp {
    char op; // one of + - * / ^
    ExprPtr lhs;
    ExprPtr rhs;
};
struct Call {
    Builtin fn;
    ExprPtr arg;
};

struct ExprNode {
    std::variant<Number, Variable, Neg, BinOp, Call> node;
};

ExprPtr make_number(double value);
ExprPtr make_variable(std::string name);
ExprPtr make_neg(ExprPtr child);
ExprPtr make_binop(char op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Builtin fn, ExprPtr arg);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, size_t position);
    size_t position() const { return position_; }

private:
    size_t position_;
};

// Recursive-descent parse of: decimal/scientific numbers, variables,
// parentheses, unary minus, + - * /, power as '^' or '**' (right-associative,
// binding tighter than unary minus), and exp/log/sqrt/abs application.
// No implicit multiplication. Throws ParseError with the offending position.
ExprPtr parse_expression(const std::string& text);

// Canonical text form; power prints as '**'. parse(print(e)) is
// structurally identical to e.
std::string print_expression(const ExprPtr& expr);

using Assignment = std::map<std::string, double>;

// Real arithmetic. nullopt signals a domain error: division by zero,
// log/sqrt of a negative, zero to a negative power, or a non-finite result.
// A variable missing from the assignment throws.
std::optional<double> eval_expression(const ExprPtr& expr, const Assignment& assignment);

std::set<std::string> free_variables(const ExprPtr& expr);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

// Copy with every variable name ASCII-lowercased (name normalization for
// equivalence checks).
ExprPtr lowercase_variables(const ExprPtr& expr);

const char* to_string(Builtin fn);
std::optional<Builtin> builtin_from_name(const std::string& name);

} // namespace didact
