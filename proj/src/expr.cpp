#include "didact/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

namespace didact {

ExprPtr make_number(double value) {
    return std::make_shared<ExprNode>(ExprNode{Number{value}});
}
ExprPtr make_variable(std::string name) {
    return std::make_shared<ExprNode>(ExprNode{Variable{std::move(name)}});
}
ExprPtr make_neg(ExprPtr child) {
    return std::make_shared<ExprNode>(ExprNode{Neg{std::move(child)}});
}
ExprPtr make_binop(char op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<ExprNode>(ExprNode{BinOp{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_call(Builtin fn, ExprPtr arg) {
    return std::make_shared<ExprNode>(ExprNode{Call{fn, std::move(arg)}});
}

ParseError::ParseError(const std::string& message, size_t position)
    : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
      position_(position) {}

const char* to_string(Builtin fn) {
    switch (fn) {
    case Builtin::Exp: return "exp";
    case Builtin::Log: return "log";
    case Builtin::Sqrt: return "sqrt";
    case Builtin::Abs: return "abs";
    }
    return "?";
}

std::optional<Builtin> builtin_from_name(const std::string& name) {
    if (name == "exp") return Builtin::Exp;
    if (name == "log") return Builtin::Log;
    if (name == "sqrt") return Builtin::Sqrt;
    if (name == "abs") return Builtin::Abs;
    return std::nullopt;
}

namespace {

enum class TokenKind { Number, Ident, Plus, Minus, Star, Slash, Power, LParen, RParen, End };

struct Token {
    TokenKind kind;
    size_t position;
    double number = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) {
                tokens.push_back(Token{TokenKind::End, pos_});
                return tokens;
            }
            const size_t start = pos_;
            const char c = text_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && has_digit_after_dot())) {
                tokens.push_back(lex_number());
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                tokens.push_back(lex_ident());
            } else {
                switch (c) {
                case '+': tokens.push_back(Token{TokenKind::Plus, start}); ++pos_; break;
                case '-': tokens.push_back(Token{TokenKind::Minus, start}); ++pos_; break;
                case '*':
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
                        tokens.push_back(Token{TokenKind::Power, start});
                        pos_ += 2;
                    } else {
                        tokens.push_back(Token{TokenKind::Star, start});
                        ++pos_;
                    }
                    break;
                case '/': tokens.push_back(Token{TokenKind::Slash, start}); ++pos_; break;
                case '^': tokens.push_back(Token{TokenKind::Power, start}); ++pos_; break;
                case '(': tokens.push_back(Token{TokenKind::LParen, start}); ++pos_; break;
                case ')': tokens.push_back(Token{TokenKind::RParen, start}); ++pos_; break;
                default:
                    throw ParseError(std::string("unexpected character '") + c + "'", start);
                }
            }
        }
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool has_digit_after_dot() const {
        return pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]));
    }

    Token lex_number() {
        const size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_ + 1;
            if (mark < text_.size() && (text_[mark] == '+' || text_[mark] == '-')) {
                ++mark;
            }
            if (mark < text_.size() && std::isdigit(static_cast<unsigned char>(text_[mark]))) {
                pos_ = mark;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            }
        }
        const std::string span = text_.substr(start, pos_ - start);
        char* end = nullptr;
        const double value = std::strtod(span.c_str(), &end);
        if (end != span.c_str() + span.size()) {
            throw ParseError("malformed number '" + span + "'", start);
        }
        Token token{TokenKind::Number, start};
        token.number = value;
        return token;
    }

    Token lex_ident() {
        const size_t start = pos_;
        ++pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        Token token{TokenKind::Ident, start};
        token.text = text_.substr(start, pos_ - start);
        return token;
    }

    const std::string& text_;
    size_t pos_ = 0;
};

// expr  := term (('+'|'-') term)*
// term  := unary (('*'|'/') unary)*
// unary := '-' unary | power
// power := atom (('^'|'**') unary)?
// atom  := number | ident | ident '(' expr ')' | '(' expr ')'
class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    ExprPtr run() {
        ExprPtr expr = parse_expr();
        if (peek().kind != TokenKind::End) {
            throw ParseError("trailing tokens after expression", peek().position);
        }
        return expr;
    }

private:
    const Token& peek() const { return tokens_[index_]; }
    const Token& advance() { return tokens_[index_++]; }
    bool accept(TokenKind kind) {
        if (peek().kind == kind) {
            ++index_;
            return true;
        }
        return false;
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        while (peek().kind == TokenKind::Plus || peek().kind == TokenKind::Minus) {
            const char op = advance().kind == TokenKind::Plus ? '+' : '-';
            lhs = make_binop(op, std::move(lhs), parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        while (peek().kind == TokenKind::Star || peek().kind == TokenKind::Slash) {
            const char op = advance().kind == TokenKind::Star ? '*' : '/';
            lhs = make_binop(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (accept(TokenKind::Minus)) {
            return make_neg(parse_unary());
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept(TokenKind::Power)) {
            return make_binop('^', std::move(base), parse_unary());
        }
        return base;
    }

    ExprPtr parse_atom() {
        const Token& token = peek();
        switch (token.kind) {
        case TokenKind::Number:
            advance();
            return make_number(token.number);
        case TokenKind::Ident: {
            advance();
            if (accept(TokenKind::LParen)) {
                const auto fn = builtin_from_name(token.text);
                if (!fn) {
                    throw ParseError("unknown function '" + token.text + "'", token.position);
                }
                ExprPtr arg = parse_expr();
                expect_rparen(token.position);
                return make_call(*fn, std::move(arg));
            }
            return make_variable(token.text);
        }
        case TokenKind::LParen: {
            advance();
            ExprPtr inner = parse_expr();
            expect_rparen(token.position);
            return inner;
        }
        case TokenKind::End:
            throw ParseError("unexpected end of input", token.position);
        default:
            throw ParseError("unexpected token", token.position);
        }
    }

    void expect_rparen(size_t open_position) {
        if (!accept(TokenKind::RParen)) {
            if (peek().kind == TokenKind::End) {
                throw ParseError("unbalanced parenthesis", open_position);
            }
            throw ParseError("expected ')'", peek().position);
        }
    }

    std::vector<Token> tokens_;
    size_t index_ = 0;
};

std::string format_number(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) {
        return std::to_string(value);
    }
    return std::string(buffer, end);
}

// Precedence levels for printing: additive 1, multiplicative 2, unary 3,
// power 4, atoms 5.
int precedence_of(const ExprNode& node) {
    struct Visitor {
        int operator()(const Number&) const { return 5; }
        int operator()(const Variable&) const { return 5; }
        int operator()(const Call&) const { return 5; }
        int operator()(const Neg&) const { return 3; }
        int operator()(const BinOp& b) const {
            switch (b.op) {
            case '+':
            case '-': return 1;
            case '*':
            case '/': return 2;
            default: return 4;
            }
        }
    };
    return std::visit(Visitor{}, node.node);
}

std::string print_node(const ExprPtr& expr);

std::string wrap_if(bool needed, const std::string& inner) {
    return needed ? "(" + inner + ")" : inner;
}

std::string print_node(const ExprPtr& expr) {
    struct Visitor {
        std::string operator()(const Number& n) const {
            const std::string body = format_number(n.value);
            return n.value < 0 ? "(" + body + ")" : body;
        }
        std::string operator()(const Variable& v) const { return v.name; }
        std::string operator()(const Call& c) const {
            return std::string(to_string(c.fn)) + "(" + print_node(c.arg) + ")";
        }
        std::string operator()(const Neg& n) const {
            const int child = precedence_of(*n.child);
            const bool parens = child < 4; // keep anything looser than power bracketed
            return "-" + wrap_if(parens, print_node(n.child));
        }
        std::string operator()(const BinOp& b) const {
            const int lhs_prec = precedence_of(*b.lhs);
            const int rhs_prec = precedence_of(*b.rhs);
            switch (b.op) {
            case '+':
            case '-':
                return print_node(b.lhs) + (b.op == '+' ? " + " : " - ") +
                       wrap_if(rhs_prec <= 1, print_node(b.rhs));
            case '*':
            case '/':
                return wrap_if(lhs_prec < 2, print_node(b.lhs)) + b.op +
                       wrap_if(rhs_prec <= 2, print_node(b.rhs));
            default: // power: lhs must be an atom, rhs may be unary
                return wrap_if(lhs_prec < 5, print_node(b.lhs)) + "**" +
                       wrap_if(rhs_prec < 5, print_node(b.rhs));
            }
        }
    };
    return std::visit(Visitor{}, expr->node);
}

bool is_integer(double value) {
    return std::isfinite(value) && value == std::floor(value);
}

} // namespace

ExprPtr parse_expression(const std::string& text) {
    return Parser(Lexer(text).run()).run();
}

std::string print_expression(const ExprPtr& expr) {
    return print_node(expr);
}

std::optional<double> eval_expression(const ExprPtr& expr, const Assignment& assignment) {
    struct Visitor {
        const Assignment& assignment;

        std::optional<double> finite(double value) const {
            if (!std::isfinite(value)) {
                return std::nullopt;
            }
            return value;
        }

        std::optional<double> operator()(const Number& n) const { return finite(n.value); }

        std::optional<double> operator()(const Variable& v) const {
            auto it = assignment.find(v.name);
            if (it == assignment.end()) {
                throw std::invalid_argument("eval_expression: unbound variable '" + v.name + "'");
            }
            return finite(it->second);
        }

        std::optional<double> operator()(const Neg& n) const {
            auto child = eval_expression(n.child, assignment);
            if (!child) {
                return std::nullopt;
            }
            return finite(-*child);
        }

        std::optional<double> operator()(const BinOp& b) const {
            auto lhs = eval_expression(b.lhs, assignment);
            auto rhs = eval_expression(b.rhs, assignment);
            if (!lhs || !rhs) {
                return std::nullopt;
            }
            switch (b.op) {
            case '+': return finite(*lhs + *rhs);
            case '-': return finite(*lhs - *rhs);
            case '*': return finite(*lhs * *rhs);
            case '/':
                if (*rhs == 0.0) {
                    return std::nullopt;
                }
                return finite(*lhs / *rhs);
            default:
                if (*lhs == 0.0 && *rhs < 0.0) {
                    return std::nullopt;
                }
                if (*lhs < 0.0 && !is_integer(*rhs)) {
                    return std::nullopt;
                }
                return finite(std::pow(*lhs, *rhs));
            }
        }

        std::optional<double> operator()(const Call& c) const {
            auto arg = eval_expression(c.arg, assignment);
            if (!arg) {
                return std::nullopt;
            }
            switch (c.fn) {
            case Builtin::Exp: return finite(std::exp(*arg));
            case Builtin::Log:
                if (*arg <= 0.0) {
                    return std::nullopt;
                }
                return finite(std::log(*arg));
            case Builtin::Sqrt:
                if (*arg < 0.0) {
                    return std::nullopt;
                }
                return finite(std::sqrt(*arg));
            case Builtin::Abs: return finite(std::fabs(*arg));
            }
            return std::nullopt;
        }
    };
    return std::visit(Visitor{assignment}, expr->node);
}

std::set<std::string> free_variables(const ExprPtr& expr) {
    std::set<std::string> names;
    struct Visitor {
        std::set<std::string>& names;
        void operator()(const Number&) const {}
        void operator()(const Variable& v) const { names.insert(v.name); }
        void operator()(const Neg& n) const { std::visit(*this, n.child->node); }
        void operator()(const BinOp& b) const {
            std::visit(*this, b.lhs->node);
            std::visit(*this, b.rhs->node);
        }
        void operator()(const Call& c) const { std::visit(*this, c.arg->node); }
    };
    std::visit(Visitor{names}, expr->node);
    return names;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a->node.index() != b->node.index()) {
        return false;
    }
    struct Visitor {
        const ExprNode& other;
        bool operator()(const Number& n) const { return std::get<Number>(other.node).value == n.value; }
        bool operator()(const Variable& v) const { return std::get<Variable>(other.node).name == v.name; }
        bool operator()(const Neg& n) const {
            return structurally_equal(n.child, std::get<Neg>(other.node).child);
        }
        bool operator()(const BinOp& b) const {
            const auto& o = std::get<BinOp>(other.node);
            return b.op == o.op && structurally_equal(b.lhs, o.lhs) && structurally_equal(b.rhs, o.rhs);
        }
        bool operator()(const Call& c) const {
            const auto& o = std::get<Call>(other.node);
            return c.fn == o.fn && structurally_equal(c.arg, o.arg);
        }
    };
    return std::visit(Visitor{*b}, a->node);
}

ExprPtr lowercase_variables(const ExprPtr& expr) {
    struct Visitor {
        ExprPtr operator()(const Number& n) const { return make_number(n.value); }
        ExprPtr operator()(const Variable& v) const {
            std::string name = v.name;
            for (char& c : name) {
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
            return make_variable(std::move(name));
        }
        ExprPtr operator()(const Neg& n) const { return make_neg(lowercase_variables(n.child)); }
        ExprPtr operator()(const BinOp& b) const {
            return make_binop(b.op, lowercase_variables(b.lhs), lowercase_variables(b.rhs));
        }
        ExprPtr operator()(const Call& c) const { return make_call(c.fn, lowercase_variables(c.arg)); }
    };
    return std::visit(Visitor{}, expr->node);
}

} // namespace didact
