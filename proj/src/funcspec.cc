#include <polyext/error.hh>
#include <polyext/funcspec.hh>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace polyext {

Expr Expr::number(cplx v)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::number;
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::variable(std::string name)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::unary(Kind kind, Expr operand)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(operand)};
    return Expr(std::move(n));
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(lhs), std::move(rhs)};
    return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::pow;
    n->exponent = exponent;
    n->args = {std::move(base)};
    return Expr(std::move(n));
}

Expr Expr::call(Func f, Expr arg)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::call;
    n->func = f;
    n->args = {std::move(arg)};
    return Expr(std::move(n));
}

Expr Expr::piecewise(std::string var, bool less_equal, Expr bound, Expr then, Expr otherwise)
{
    auto n = std::make_shared<Node>();
    n->kind = Kind::piecewise;
    n->name = std::move(var);
    n->less_equal = less_equal;
    n->args = {std::move(bound), std::move(then), std::move(otherwise)};
    return Expr(std::move(n));
}

std::set<std::string> Expr::variables() const
{
    std::set<std::string> out;
    std::vector<const Node *> stack{node_.get()};
    while (! stack.empty()) {
        const Node * n = stack.back();
        stack.pop_back();
        if (n->kind == Kind::variable || n->kind == Kind::piecewise)
            out.insert(n->name);
        for (const auto & a : n->args)
            stack.push_back(&a.node());
    }
    return out;
}

namespace {

const char * func_name(Func f)
{
    switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::sqrt: return "sqrt";
    case Func::abs: return "abs";
    }
    return "?";
}

bool is_variable_name(std::string_view s)
{
    return s == "x" || s == "theta" || s == "theta1" || s == "theta2";
}

enum class Tok { number, imag, ident, op, le, ge, end };

struct Token {
    Tok kind;
    std::string text;
    double value = 0.0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view s) : src_(s) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                t.kind = Tok::end;
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))
                lex_number(t);
            else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t start = pos_;
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance();
                t.kind = Tok::ident;
                t.text = std::string(src_.substr(start, pos_ - start));
            }
            else if ((c == '<' || c == '>') && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
                t.kind = c == '<' ? Tok::le : Tok::ge;
                t.text = c == '<' ? "<=" : ">=";
                advance();
                advance();
            }
            else if (std::string_view("+-*/^(),").find(c) != std::string_view::npos) {
                t.kind = Tok::op;
                t.text = std::string(1, c);
                advance();
            }
            else
                throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
            out.push_back(std::move(t));
        }
    }

private:
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        }
        else
            ++col_;
        ++pos_;
    }

    void skip_space()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            advance();
    }

    void lex_number(Token & t)
    {
        size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance();
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            size_t save = pos_;
            int save_col = col_;
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                advance();
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                digits();
            else {
                pos_ = save;
                col_ = save_col;
            }
        }
        t.text = std::string(src_.substr(start, pos_ - start));
        std::string_view txt = t.text;
        if (! txt.empty() && txt.front() == '.') {
            t.text = "0" + t.text;
            txt = t.text;
        }
        auto [ptr, ec] = std::from_chars(txt.data(), txt.data() + txt.size(), t.value);
        if (ec != std::errc() || ptr != txt.data() + txt.size())
            throw ParseError(t.line, t.column, "malformed number '" + t.text + "'");
        t.kind = Tok::number;
        if (pos_ < src_.size() && src_[pos_] == 'i') {
            bool ident_follows = pos_ + 1 < src_.size()
                && (std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '_');
            if (! ident_follows) {
                advance();
                t.kind = Tok::imag;
            }
        }
    }

    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Expr parse_all()
    {
        Expr e = expr();
        if (peek().kind != Tok::end)
            fail(peek(), "unexpected '" + peek().text + "'");
        return e;
    }

private:
    const Token & peek() const { return toks_[pos_]; }
    const Token & take() { return toks_[pos_++]; }
    bool is_op(const char * op) const { return peek().kind == Tok::op && peek().text == op; }

    [[noreturn]] static void fail(const Token & t, const std::string & msg) { throw ParseError(t.line, t.column, msg); }

    void expect(const char * op)
    {
        if (! is_op(op)) {
            const Token & t = peek();
            fail(t, std::string("expected '") + op + "' but found " + (t.kind == Tok::end ? "end of input" : "'" + t.text + "'"));
        }
        ++pos_;
    }

    Expr expr()
    {
        Expr lhs = term();
        while (is_op("+") || is_op("-")) {
            auto k = take().text == "+" ? Expr::Kind::add : Expr::Kind::sub;
            lhs = Expr::binary(k, lhs, term());
        }
        return lhs;
    }

    Expr term()
    {
        Expr lhs = unary();
        while (is_op("*") || is_op("/")) {
            auto k = take().text == "*" ? Expr::Kind::mul : Expr::Kind::div;
            lhs = Expr::binary(k, lhs, unary());
        }
        return lhs;
    }

    Expr unary()
    {
        if (is_op("-")) {
            ++pos_;
            return Expr::unary(Expr::Kind::neg, unary());
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (is_op("^")) {
            ++pos_;
            const Token & t = peek();
            bool integral = t.kind == Tok::number && t.text.find_first_not_of("0123456789") == std::string::npos;
            if (! integral)
                fail(t, "expected a nonnegative integer exponent after '^'");
            if (t.value > 64)
                fail(t, "exponent too large");
            ++pos_;
            return Expr::power(base, static_cast<int>(t.value));
        }
        return base;
    }

    Expr primary()
    {
        const Token & t = peek();
        switch (t.kind) {
        case Tok::number:
            ++pos_;
            return Expr::number({t.value, 0.0});
        case Tok::imag:
            ++pos_;
            return Expr::number({0.0, t.value});
        case Tok::op:
            if (t.text == "(") {
                ++pos_;
                Expr e = expr();
                expect(")");
                return e;
            }
            fail(t, "unexpected '" + t.text + "'");
        case Tok::end:
            fail(t, "unexpected end of input");
        case Tok::le:
        case Tok::ge:
            fail(t, "unexpected '" + t.text + "'");
        case Tok::ident:
            break;
        }
        ++pos_;
        const std::string & id = t.text;
        if (id == "pi") {
            auto n = std::make_shared<Expr::Node>();
            n->kind = Expr::Kind::number;
            n->value = std::numbers::pi;
            n->name = "pi";
            return Expr(std::move(n));
        }
        if (is_variable_name(id))
            return Expr::variable(id);
        if (id == "piecewise") {
            expect("(");
            const Token & v = peek();
            if (v.kind != Tok::ident || ! is_variable_name(v.text))
                fail(v, "piecewise condition must start with a variable");
            ++pos_;
            bool le;
            if (peek().kind == Tok::le)
                le = true;
            else if (peek().kind == Tok::ge)
                le = false;
            else
                fail(peek(), "expected '<=' or '>=' in piecewise condition");
            ++pos_;
            const Token & bt = peek();
            Expr bound = expr();
            if (! bound.is_constant())
                fail(bt, "piecewise bound must be constant");
            expect(",");
            Expr a = expr();
            expect(",");
            Expr b = expr();
            if (is_op(","))
                fail(peek(), "piecewise takes exactly 3 arguments");
            expect(")");
            return Expr::piecewise(v.text, le, bound, a, b);
        }
        static const std::pair<const char *, Func> funcs[] = {
            {"sin", Func::sin}, {"cos", Func::cos}, {"exp", Func::exp}, {"sqrt", Func::sqrt}, {"abs", Func::abs}};
        for (const auto & [name, f] : funcs)
            if (id == name) {
                expect("(");
                Expr arg = expr();
                if (is_op(","))
                    fail(peek(), id + " takes exactly 1 argument");
                expect(")");
                return Expr::call(f, arg);
            }
        fail(t, "unknown identifier '" + id + "'");
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
};

std::string fmt(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

int precedence(const Expr & e)
{
    const auto & n = e.node();
    switch (n.kind) {
    case Expr::Kind::number:
        if (n.value.imag() == 0.0)
            return std::signbit(n.value.real()) ? 3 : 5;
        if (n.value.real() == 0.0 && ! std::signbit(n.value.imag()))
            return 5;
        return 1;
    case Expr::Kind::add:
    case Expr::Kind::sub: return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div: return 2;
    case Expr::Kind::neg: return 3;
    case Expr::Kind::pow: return 4;
    default: return 5;
    }
}

void print_to(const Expr & e, int min_prec, std::string & out);

void print_raw(const Expr & e, std::string & out)
{
    const auto & n = e.node();
    switch (n.kind) {
    case Expr::Kind::number: {
        if (n.name == "pi") {
            out += "pi";
            return;
        }
        double re = n.value.real(), im = n.value.imag();
        if (im == 0.0) {
            if (std::signbit(re))
                out += "-" + fmt(-re);
            else
                out += fmt(re);
        }
        else if (re == 0.0 && ! std::signbit(im))
            out += fmt(im) + "i";
        else {
            out += fmt(re);
            out += im < 0 ? " - " : " + ";
            out += fmt(std::abs(im)) + "i";
        }
        return;
    }
    case Expr::Kind::variable: out += n.name; return;
    case Expr::Kind::neg:
        out += "-";
        print_to(n.args[0], 3, out);
        return;
    case Expr::Kind::add:
    case Expr::Kind::sub:
        print_to(n.args[0], 1, out);
        out += n.kind == Expr::Kind::add ? " + " : " - ";
        print_to(n.args[1], 2, out);
        return;
    case Expr::Kind::mul:
    case Expr::Kind::div:
        print_to(n.args[0], 2, out);
        out += n.kind == Expr::Kind::mul ? "*" : "/";
        print_to(n.args[1], 3, out);
        return;
    case Expr::Kind::pow:
        print_to(n.args[0], 5, out);
        out += "^" + std::to_string(n.exponent);
        return;
    case Expr::Kind::call:
        out += func_name(n.func);
        out += "(";
        print_to(n.args[0], 0, out);
        out += ")";
        return;
    case Expr::Kind::piecewise:
        out += "piecewise(" + n.name + (n.less_equal ? " <= " : " >= ");
        print_to(n.args[0], 0, out);
        out += ", ";
        print_to(n.args[1], 0, out);
        out += ", ";
        print_to(n.args[2], 0, out);
        out += ")";
        return;
    }
}

void print_to(const Expr & e, int min_prec, std::string & out)
{
    if (precedence(e) < min_prec) {
        out += "(";
        print_raw(e, out);
        out += ")";
    }
    else
        print_raw(e, out);
}

struct Env {
    BaseKind kind;
    Coordinate c;

    double lookup(const std::string & name) const
    {
        switch (kind) {
        case BaseKind::interval:
            if (name == "x")
                return c.u;
            break;
        case BaseKind::circle:
            if (name == "theta")
                return c.u;
            break;
        case BaseKind::torus2:
            if (name == "theta1")
                return c.u;
            if (name == "theta2")
                return c.v;
            break;
        case BaseKind::graph: break;
        }
        throw EvalError("variable '" + name + "' is not defined on a " + to_string(kind) + " base");
    }
};

cplx ipow(cplx b, int k)
{
    cplx r = 1.0;
    while (k > 0) {
        if (k & 1)
            r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

cplx eval_node(const Expr & e, const Env & env)
{
    const auto & n = e.node();
    switch (n.kind) {
    case Expr::Kind::number: return n.value;
    case Expr::Kind::variable: return env.lookup(n.name);
    case Expr::Kind::neg: return cplx(0.0) - eval_node(n.args[0], env);
    case Expr::Kind::add: return eval_node(n.args[0], env) + eval_node(n.args[1], env);
    case Expr::Kind::sub: return eval_node(n.args[0], env) - eval_node(n.args[1], env);
    case Expr::Kind::mul: return eval_node(n.args[0], env) * eval_node(n.args[1], env);
    case Expr::Kind::div: return eval_node(n.args[0], env) / eval_node(n.args[1], env);
    case Expr::Kind::pow: return ipow(eval_node(n.args[0], env), n.exponent);
    case Expr::Kind::call: {
        cplx a = eval_node(n.args[0], env);
        switch (n.func) {
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::exp: return std::exp(a);
        case Func::sqrt: return std::sqrt(a.imag() == 0.0 ? cplx(a.real(), 0.0) : a);
        case Func::abs: return std::abs(a);
        }
        return a;
    }
    case Expr::Kind::piecewise: {
        double v = env.lookup(n.name);
        double bound = eval_node(n.args[0], env).real();
        bool cond = n.less_equal ? v <= bound : v >= bound;
        return eval_node(n.args[cond ? 1 : 2], env);
    }
    }
    return 0.0;
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}

Expr parse(std::string_view text)
{
    Lexer lex(text);
    Parser p(lex.run());
    return p.parse_all();
}

std::string print(const Expr & e)
{
    std::string out;
    print_to(e, 0, out);
    return out;
}

const char * variable_for(BaseKind kind, int index)
{
    switch (kind) {
    case BaseKind::interval: return "x";
    case BaseKind::circle: return "theta";
    case BaseKind::torus2: return index == 0 ? "theta1" : "theta2";
    case BaseKind::graph: break;
    }
    return "";
}

void check_variables(const Expr & e, BaseKind kind)
{
    Env env{kind, {}};
    for (const auto & v : e.variables())
        env.lookup(v);
}

cplx eval(const Expr & e, BaseKind kind, const Coordinate & c)
{
    return eval_node(e, Env{kind, c});
}

cplx eval_at(const Expr & e, const BaseSpace & base, const EdgePoint & p)
{
    cplx v = eval(e, base.kind(), base.coordinate_at(p));
    if (! finite(v))
        throw EvalError("non-finite value at edge " + std::to_string(p.edge) + ", parameter " + fmt(p.t));
    return v;
}

SampledFunction::SampledFunction(BasePtr b, std::vector<cplx> v) : base(std::move(b)), values(std::move(v))
{
    if (! base)
        throw InvalidArgument("sampled function needs a base");
    if (static_cast<int>(values.size()) != base->sample_count())
        throw InvalidArgument("sampled function has " + std::to_string(values.size()) + " values for "
            + std::to_string(base->sample_count()) + " samples");
    for (size_t i = 0; i < values.size(); ++i)
        if (! finite(values[i]))
            throw InvalidArgument("sampled function is not finite at sample " + std::to_string(i));
}

SampledFunction SampledFunction::constant(BasePtr b, cplx v)
{
    int n = b->sample_count();
    return SampledFunction(std::move(b), std::vector<cplx>(n, v));
}

SampledFunction evaluate(const Expr & e, const BasePtr & base)
{
    check_variables(e, base->kind());
    std::vector<cplx> values(base->sample_count());
    for (int i = 0; i < base->sample_count(); ++i) {
        values[i] = eval(e, base->kind(), base->coordinate(i));
        if (! finite(values[i]))
            throw EvalError("non-finite value at sample " + std::to_string(i));
    }
    return SampledFunction(base, std::move(values));
}

namespace {

double wrap_angle(double theta)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta, two_pi);
    if (r < 0.0)
        r += two_pi;
    if (r >= two_pi)
        r = 0.0;
    return r;
}

double real_image(const Expr & e, BaseKind kind, const Coordinate & c)
{
    cplx v = eval(e, kind, c);
    if (! finite(v) || std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
        throw EvalError("map expression must be real and finite, got " + fmt(v.real()) + " + " + fmt(v.imag()) + "i");
    return v.real();
}

}

SelfMap sample_selfmap(const BasePtr & base, const std::vector<Expr> & image_exprs, double continuity_bound)
{
    const BaseKind kind = base->kind();
    size_t want = kind == BaseKind::torus2 ? 2 : 1;
    if (kind == BaseKind::graph)
        throw InvalidArgument("self-maps of graph bases must be given as tables");
    if (image_exprs.size() != want)
        throw InvalidArgument("a " + to_string(kind) + " self-map needs " + std::to_string(want) + " image expression(s)");
    for (const auto & e : image_exprs)
        check_variables(e, kind);

    SelfMap::ExactMap exact = [exprs = image_exprs, kind](const Coordinate & c) -> Coordinate {
        switch (kind) {
        case BaseKind::interval: {
            double x = real_image(exprs[0], kind, c);
            if (x < -1e-12 || x > 1.0 + 1e-12)
                throw InvalidArgument("map image " + fmt(x) + " lies outside [0, 1]");
            return {std::clamp(x, 0.0, 1.0), 0.0};
        }
        case BaseKind::circle: return {wrap_angle(real_image(exprs[0], kind, c)), 0.0};
        default: return {wrap_angle(real_image(exprs[0], kind, c)), wrap_angle(real_image(exprs[1], kind, c))};
        }
    };

    std::vector<EdgePoint> images(base->sample_count());
    for (int s = 0; s < base->sample_count(); ++s)
        images[s] = base->locate(exact(base->coordinate(s)));
    SelfMap map(base, std::move(images), exact);
    selfmap_from_table(base, map.images(), continuity_bound);
    return map;
}

}
