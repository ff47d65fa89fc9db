#pragma once

#include <map>
#include <memory>
#include <string>

namespace iwpair {

/// A parsed scalar expression in one variable `x` plus named parameters.
///
/// Supports + - * / ^, parentheses, numeric literals, the constants pi and e,
/// and the usual analytic primitives (exp, log, sqrt, sinh, cosh, tanh, abs,
/// min, max, pow, ...). Used by the JSON problem schema for densities, scale
/// functions, rewards and SDE coefficients.
class Expression {
public:
    Expression() = default;

    /// Parses `text`; `params` supplies values for free identifiers other than x.
    static Expression parse(const std::string& text,
                            std::map<std::string, double> params = {});

    double operator()(double x) const;

    bool empty() const { return !root_; }
    const std::string& text() const { return text_; }

    /// Re-binds a named parameter (used by parameter sweeps).
    void set_param(const std::string& name, double value);

    struct Node; // parse-tree node; an implementation detail

private:
    std::shared_ptr<const Node> root_;
    std::shared_ptr<std::map<std::string, double>> params_;
    std::string text_;
};

} // namespace iwpair
