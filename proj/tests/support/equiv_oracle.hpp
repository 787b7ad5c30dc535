#pragma once

// Test-side oracle machinery for expression equivalence. Independent of
// the library's sampling path: its own recursive evaluator over ExprNode,
// its own RNG stream, and a 10,000-point grid instead of 32.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "didact/expr.hpp"
#include "didact/util.hpp"

namespace didact::testsupport {

inline std::optional<double> oracle_eval(const ExprPtr& e, const Assignment& a) {
    using didact::Number;
    if (const auto* n = std::get_if<Number>(&e->node)) {
        return n->value;
    }
    if (const auto* v = std::get_if<Variable>(&e->node)) {
        return a.at(v->name);
    }
    if (const auto* neg = std::get_if<Neg>(&e->node)) {
        auto c = oracle_eval(neg->child, a);
        if (!c) return std::nullopt;
        return -*c;
    }
    if (const auto* b = std::get_if<BinOp>(&e->node)) {
        auto l = oracle_eval(b->lhs, a);
        auto r = oracle_eval(b->rhs, a);
        if (!l || !r) return std::nullopt;
        double out = 0.0;
        switch (b->op) {
        case '+': out = *l + *r; break;
        case '-': out = *l - *r; break;
        case '*': out = *l * *r; break;
        case '/':
            if (*r == 0.0) return std::nullopt;
            out = *l / *r;
            break;
        default:
            if (*l == 0.0 && *r < 0.0) return std::nullopt;
            if (*l < 0.0 && *r != std::floor(*r)) return std::nullopt;
            out = std::pow(*l, *r);
            break;
        }
        if (!std::isfinite(out)) return std::nullopt;
        return out;
    }
    const auto& call = std::get<Call>(e->node);
    auto arg = oracle_eval(call.arg, a);
    if (!arg) return std::nullopt;
    double out = 0.0;
    switch (call.fn) {
    case Builtin::Exp: out = std::exp(*arg); break;
    case Builtin::Log:
        if (*arg <= 0.0) return std::nullopt;
        out = std::log(*arg);
        break;
    case Builtin::Sqrt:
        if (*arg < 0.0) return std::nullopt;
        out = std::sqrt(*arg);
        break;
    case Builtin::Abs: out = std::fabs(*arg); break;
    }
    if (!std::isfinite(out)) return std::nullopt;
    return out;
}

enum class OracleAnswer { Equal, NotEqual, Indeterminate };

// High-density decision: 10,000 attempted sample points over [0.2, 2.0]
// per variable at the library's default tolerances.
inline OracleAnswer oracle_equivalent(const std::string& a, const std::string& b,
                                      uint64_t seed = 20240901) {
    ExprPtr lhs;
    ExprPtr rhs;
    try {
        lhs = lowercase_variables(parse_expression(a));
        rhs = lowercase_variables(parse_expression(b));
    } catch (const ParseError&) {
        return normalize_answer(a) == normalize_answer(b) ? OracleAnswer::Equal
                                                          : OracleAnswer::NotEqual;
    }
    const auto va = free_variables(lhs);
    const auto vb = free_variables(rhs);
    if (va != vb) {
        return OracleAnswer::NotEqual;
    }
    std::mt19937_64 rng(seed);
    auto next01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    int valid = 0;
    for (int i = 0; i < 10000; ++i) {
        Assignment assignment;
        for (const auto& name : va) {
            assignment[name] = 0.2 + 1.8 * next01();
        }
        const auto x = oracle_eval(lhs, assignment);
        const auto y = oracle_eval(rhs, assignment);
        if (!x || !y) {
            continue;
        }
        ++valid;
        const double tol = 1e-12 + 1e-9 * std::max(std::fabs(*x), std::fabs(*y));
        if (std::fabs(*x - *y) > tol) {
            return OracleAnswer::NotEqual;
        }
    }
    return valid > 0 ? OracleAnswer::Equal : OracleAnswer::Indeterminate;
}

// --- corpus generation: random expressions, equality-preserving rewrites,
// --- and inequality-introducing perturbations.

class ExprGen {
public:
    explicit ExprGen(uint64_t seed) : rng_(seed) {}

    // Base expressions keep denominators and function arguments positive
    // on the sampling domain so the corpus stays decidable.
    ExprPtr gen(int depth = 0) {
        const int kind = static_cast<int>(rng_.below(depth >= 3 ? 3 : 8));
        switch (kind) {
        case 0: return make_number(0.3 + 0.1 * static_cast<double>(rng_.below(20)));
        case 1: return make_variable("x");
        case 2: return make_variable("t");
        case 3: return make_binop('+', gen(depth + 1), gen(depth + 1));
        case 4: return make_binop('-', gen(depth + 1), gen(depth + 1));
        case 5: return make_binop('*', gen(depth + 1), gen(depth + 1));
        case 6: return make_binop('/', gen(depth + 1), positive(depth + 1));
        default:
            switch (rng_.below(4)) {
            case 0: return make_call(Builtin::Abs, gen(depth + 1));
            case 1: return make_call(Builtin::Sqrt, positive(depth + 1));
            case 2: return make_call(Builtin::Log, positive(depth + 1));
            default: return make_binop('^', positive(depth + 1), small_exponent());
            }
        }
    }

    // expr^2 + c with c >= 0.5: positive everywhere.
    ExprPtr positive(int depth) {
        return make_binop('+', make_binop('^', gen(depth + 1), make_number(2)),
                          make_number(0.5 + 0.1 * static_cast<double>(rng_.below(10))));
    }

    // Negative exponents use the canonical Neg(Number) form the parser
    // produces, so printed corpora re-parse to identical trees.
    ExprPtr small_exponent() {
        static const double exponents[] = {-2, -1, 0.5, 2, 3};
        const double value = exponents[rng_.below(5)];
        return value < 0 ? make_neg(make_number(-value)) : make_number(value);
    }

    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

// One of: commute (+ or *), distribute a*(b+c), power-to-division
// a^(-k) <-> 1/a^k, division-to-power a/b -> a*b^(-1). Applied at the
// first matching node of a random walk; returns nullptr when the tree has
// no rewrite site.
inline ExprPtr rewrite_once(const ExprPtr& e, Rng& rng) {
    if (const auto* b = std::get_if<BinOp>(&e->node)) {
        const bool descend = rng.below(3) == 0;
        if (!descend) {
            if (b->op == '+' || b->op == '*') {
                if (b->op == '*') {
                    if (const auto* add = std::get_if<BinOp>(&b->rhs->node);
                        add != nullptr && add->op == '+' && rng.below(2) == 0) {
                        // a*(b+c) -> a*b + a*c
                        return make_binop('+', make_binop('*', b->lhs, add->lhs),
                                          make_binop('*', b->lhs, add->rhs));
                    }
                }
                return make_binop(b->op, b->rhs, b->lhs);
            }
            if (b->op == '/') {
                // a/b -> a * b^(-1)
                return make_binop('*', b->lhs, make_binop('^', b->rhs, make_number(-1)));
            }
            if (b->op == '^') {
                // a^(-k) -> 1 / a^k, for either spelling of the negative.
                if (const auto* n = std::get_if<Number>(&b->rhs->node);
                    n != nullptr && n->value < 0) {
                    return make_binop('/', make_number(1),
                                      make_binop('^', b->lhs, make_number(-n->value)));
                }
                if (const auto* neg = std::get_if<Neg>(&b->rhs->node)) {
                    if (std::get_if<Number>(&neg->child->node) != nullptr) {
                        return make_binop('/', make_number(1),
                                          make_binop('^', b->lhs, neg->child));
                    }
                }
            }
        }
        if (auto l = rewrite_once(b->lhs, rng)) {
            return make_binop(b->op, l, b->rhs);
        }
        if (auto r = rewrite_once(b->rhs, rng)) {
            return make_binop(b->op, b->lhs, r);
        }
        if (b->op == '+' || b->op == '*') {
            return make_binop(b->op, b->rhs, b->lhs);
        }
        return nullptr;
    }
    if (const auto* neg = std::get_if<Neg>(&e->node)) {
        if (auto c = rewrite_once(neg->child, rng)) {
            return make_neg(c);
        }
        return nullptr;
    }
    if (const auto* call = std::get_if<Call>(&e->node)) {
        if (auto c = rewrite_once(call->arg, rng)) {
            return make_call(call->fn, c);
        }
        return nullptr;
    }
    return nullptr;
}

// Nudges one constant or flips one additive op.
inline ExprPtr perturb_once(const ExprPtr& e, Rng& rng, bool& changed) {
    if (changed) {
        return e;
    }
    if (const auto* n = std::get_if<Number>(&e->node)) {
        if (rng.below(2) == 0) {
            changed = true;
            return make_number(n->value + 0.25 + 0.25 * static_cast<double>(rng.below(3)));
        }
        return e;
    }
    if (const auto* v = std::get_if<Variable>(&e->node)) {
        (void)v;
        return e;
    }
    if (const auto* neg = std::get_if<Neg>(&e->node)) {
        return make_neg(perturb_once(neg->child, rng, changed));
    }
    if (const auto* b = std::get_if<BinOp>(&e->node)) {
        if ((b->op == '+' || b->op == '-') && rng.below(3) == 0) {
            changed = true;
            return make_binop(b->op == '+' ? '-' : '+', b->lhs, b->rhs);
        }
        auto l = perturb_once(b->lhs, rng, changed);
        auto r = perturb_once(b->rhs, rng, changed);
        return make_binop(b->op, l, r);
    }
    const auto& call = std::get<Call>(e->node);
    return make_call(call.fn, perturb_once(call.arg, rng, changed));
}

struct CorpusPair {
    std::string a;
    std::string b;
};

// Algebraically equal pairs: up to three rewrites of a generated base.
inline std::vector<CorpusPair> make_equal_pairs(int count, uint64_t seed) {
    ExprGen gen(seed);
    std::vector<CorpusPair> pairs;
    while (static_cast<int>(pairs.size()) < count) {
        ExprPtr base = gen.gen();
        ExprPtr rewritten = base;
        const int passes = 1 + static_cast<int>(gen.rng().below(3));
        bool any = false;
        for (int i = 0; i < passes; ++i) {
            if (auto next = rewrite_once(rewritten, gen.rng())) {
                rewritten = next;
                any = true;
            }
        }
        if (!any) {
            continue;
        }
        CorpusPair pair{print_expression(base), print_expression(rewritten)};
        if (oracle_equivalent(pair.a, pair.b, seed + pairs.size()) != OracleAnswer::Equal) {
            continue; // degenerate domain; regenerate
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

// Perturbed pairs verified non-equal by the oracle.
inline std::vector<CorpusPair> make_unequal_pairs(int count, uint64_t seed) {
    ExprGen gen(seed ^ 0x5bd1e995u);
    std::vector<CorpusPair> pairs;
    while (static_cast<int>(pairs.size()) < count) {
        ExprPtr base = gen.gen();
        bool changed = false;
        ExprPtr mutated = perturb_once(base, gen.rng(), changed);
        if (!changed) {
            continue;
        }
        CorpusPair pair{print_expression(base), print_expression(mutated)};
        if (oracle_equivalent(pair.a, pair.b, seed + pairs.size()) != OracleAnswer::NotEqual) {
            continue; // perturbation collapsed or domain vanished
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

} // namespace didact::testsupport
