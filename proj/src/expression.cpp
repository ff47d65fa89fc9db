#include "iwpair/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "iwpair/errors.hpp"

namespace iwpair {

namespace {

enum class Op {
    number, var, param,
    add, sub, mul, div, pow, neg,
    call1, call2
};

using Fn1 = double (*)(double);
using Fn2 = double (*)(double, double);

double fn_min(double a, double b) { return a < b ? a : b; }
double fn_max(double a, double b) { return a > b ? a : b; }
double fn_sign(double a) { return a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0); }
double fn_pos(double a) { return a > 0 ? a : 0.0; }

const std::map<std::string, Fn1>& fn1_table() {
    static const std::map<std::string, Fn1> t = {
        {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
        {"cbrt", std::cbrt}, {"sin", std::sin},   {"cos", std::cos},
        {"tan", std::tan},   {"sinh", std::sinh}, {"cosh", std::cosh},
        {"tanh", std::tanh}, {"asinh", std::asinh}, {"acosh", std::acosh},
        {"atanh", std::atanh}, {"atan", std::atan}, {"abs", std::fabs},
        {"erf", std::erf},   {"sign", fn_sign},   {"pos", fn_pos},
    };
    return t;
}

const std::map<std::string, Fn2>& fn2_table() {
    static const std::map<std::string, Fn2> t = {
        {"pow", std::pow}, {"min", fn_min}, {"max", fn_max},
    };
    return t;
}

} // namespace

struct Expression::Node {
    Op op;
    double value = 0.0;               // number
    std::string name;                 // param
    Fn1 f1 = nullptr;
    Fn2 f2 = nullptr;
    std::shared_ptr<const Node> a, b;
};

namespace {

class Parser {
public:
    Parser(const std::string& s, const std::map<std::string, double>& params)
        : s_(s), params_(params) {}

    std::shared_ptr<const Expression::Node> run() {
        auto e = expr();
        skip_ws();
        if (pos_ != s_.size())
            throw ValidationError("expression", "trailing input at '" + s_.substr(pos_) + "'");
        return e;
    }

private:
    using NodePtr = std::shared_ptr<const Expression::Node>;

    NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_shared<Expression::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            skip_ws();
            if (eat('+')) lhs = make(Op::add, lhs, term());
            else if (eat('-')) lhs = make(Op::sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        auto lhs = factor();
        for (;;) {
            skip_ws();
            if (eat('*')) lhs = make(Op::mul, lhs, factor());
            else if (eat('/')) lhs = make(Op::div, lhs, factor());
            else return lhs;
        }
    }

    // Unary minus binds looser than '^': -x^2 is -(x^2).
    NodePtr factor() {
        skip_ws();
        if (eat('-')) return make(Op::neg, factor());
        if (eat('+')) return factor();
        return power();
    }

    NodePtr power() {
        auto base = atom();
        skip_ws();
        if (eat('^')) return make(Op::pow, base, factor()); // right assoc
        return base;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= s_.size()) throw ValidationError("expression", "unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        throw ValidationError("expression", std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                s_[end] == 'e' || s_[end] == 'E' ||
                ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
                 (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
            ++end;
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::number;
        try {
            n->value = std::stod(s_.substr(pos_, end - pos_));
        } catch (const std::exception&) {
            throw ValidationError("expression", "bad numeric literal");
        }
        pos_ = end;
        return n;
    }

    NodePtr ident() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
            ++end;
        std::string name = s_.substr(pos_, end - pos_);
        pos_ = end;
        skip_ws();

        if (pos_ < s_.size() && s_[pos_] == '(') {
            ++pos_;
            auto arg1 = expr();
            skip_ws();
            if (eat(',')) {
                auto arg2 = expr();
                expect(')');
                auto it = fn2_table().find(name);
                if (it == fn2_table().end())
                    throw ValidationError("expression", "unknown function '" + name + "'");
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::call2;
                n->f2 = it->second;
                n->a = arg1;
                n->b = arg2;
                return n;
            }
            expect(')');
            auto it = fn1_table().find(name);
            if (it == fn1_table().end())
                throw ValidationError("expression", "unknown function '" + name + "'");
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::call1;
            n->f1 = it->second;
            n->a = arg1;
            return n;
        }

        if (name == "x") { auto n = std::make_shared<Expression::Node>(); n->op = Op::var; return n; }
        if (name == "pi") { auto n = std::make_shared<Expression::Node>(); n->op = Op::number; n->value = M_PI; return n; }
        if (name == "e") { auto n = std::make_shared<Expression::Node>(); n->op = Op::number; n->value = M_E; return n; }
        if (!params_.count(name))
            throw ValidationError("expression", "unknown identifier '" + name + "'");
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::param;
        n->name = name;
        return n;
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (!eat(c))
            throw ValidationError("expression", std::string("expected '") + c + "'");
    }

    const std::string& s_;
    const std::map<std::string, double>& params_;
    size_t pos_ = 0;
};

double eval_node(const Expression::Node& n, double x,
                 const std::map<std::string, double>& params);

double eval_node(const Expression::Node& n, double x,
                 const std::map<std::string, double>& params) {
    switch (n.op) {
        case Op::number: return n.value;
        case Op::var: return x;
        case Op::param: {
            auto it = params.find(n.name);
            if (it == params.end())
                throw ValidationError("expression", "unbound parameter '" + n.name + "'");
            return it->second;
        }
        case Op::add: return eval_node(*n.a, x, params) + eval_node(*n.b, x, params);
        case Op::sub: return eval_node(*n.a, x, params) - eval_node(*n.b, x, params);
        case Op::mul: return eval_node(*n.a, x, params) * eval_node(*n.b, x, params);
        case Op::div: return eval_node(*n.a, x, params) / eval_node(*n.b, x, params);
        case Op::pow: return std::pow(eval_node(*n.a, x, params), eval_node(*n.b, x, params));
        case Op::neg: return -eval_node(*n.a, x, params);
        case Op::call1: return n.f1(eval_node(*n.a, x, params));
        case Op::call2: return n.f2(eval_node(*n.a, x, params), eval_node(*n.b, x, params));
    }
    return 0.0;
}

} // namespace

Expression Expression::parse(const std::string& text, std::map<std::string, double> params) {
    Expression e;
    e.params_ = std::make_shared<std::map<std::string, double>>(std::move(params));
    Parser p(text, *e.params_);
    e.root_ = p.run();
    e.text_ = text;
    return e;
}

double Expression::operator()(double x) const {
    if (!root_) throw ValidationError("expression", "empty expression");
    return eval_node(*root_, x, *params_);
}

void Expression::set_param(const std::string& name, double value) {
    if (!params_) params_ = std::make_shared<std::map<std::string, double>>();
    (*params_)[name] = value;
}

} // namespace iwpair
