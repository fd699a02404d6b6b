#pragma once

#include <polyext/base.hh>

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace polyext {

enum class Func { sin, cos, exp, sqrt, abs };

/// Immutable expression tree. Copies share nodes.
class Expr {
public:
    enum class Kind { number, variable, neg, add, sub, mul, div, pow, call, piecewise };

    struct Node {
        Kind kind;
        cplx value{};           // number
        std::string name;       // variable; piecewise condition variable
        Func func = Func::sin;  // call
        int exponent = 0;       // pow
        bool less_equal = true; // piecewise: var <= bound, else var >= bound
        std::vector<Expr> args; // operands; piecewise: bound, then, otherwise
    };

    Expr() = default;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    static Expr number(cplx v);
    static Expr variable(std::string name);
    static Expr unary(Kind kind, Expr operand);
    static Expr binary(Kind kind, Expr lhs, Expr rhs);
    static Expr power(Expr base, int exponent);
    static Expr call(Func f, Expr arg);
    static Expr piecewise(std::string var, bool less_equal, Expr bound, Expr then, Expr otherwise);

    bool valid() const noexcept { return static_cast<bool>(node_); }
    const Node & node() const { return *node_; }
    Kind kind() const { return node_->kind; }

    std::set<std::string> variables() const;
    bool is_constant() const { return variables().empty(); }

private:
    std::shared_ptr<const Node> node_;
};

/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' INT)?
///   primary := NUMBER | IMAG | 'pi' | VAR | FUNC '(' expr ')'
///            | 'piecewise' '(' VAR ('<=' | '>=') expr ',' expr ',' expr ')' | '(' expr ')'
Expr parse(std::string_view text);

/// Canonical text with minimal parentheses; parse(print(e)) prints identically.
std::string print(const Expr & e);

const char * variable_for(BaseKind kind, int index = 0);

/// Evaluates at a coordinate of a base of the given kind.
cplx eval(const Expr & e, BaseKind kind, const Coordinate & c);

/// Exact evaluation at a skeleton point (coordinate interpolated, not values).
cplx eval_at(const Expr & e, const BaseSpace & base, const EdgePoint & p);

/// Throws EvalError when the expression uses a variable the base does not have.
void check_variables(const Expr & e, BaseKind kind);

/// A complex function given by its values at the samples of a base.
struct SampledFunction {
    BasePtr base;
    std::vector<cplx> values;

    SampledFunction() = default;
    SampledFunction(BasePtr b, std::vector<cplx> v);

    static SampledFunction constant(BasePtr b, cplx v);

    int size() const noexcept { return static_cast<int>(values.size()); }
    cplx operator[](int i) const { return values[i]; }
};

SampledFunction evaluate(const Expr & e, const BasePtr & base);

}
