#pragma once

// Small arithmetic expression language shared by the finite-field parser,
// tower coefficient strings and the CLI.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' exponent)?
//   atom   := integer | identifier | '(' expr ')' | '[' expr ']'
//   exponent := integer | '-' integer | '(' ['-'] integer ['/' integer] ')'
//
// '[x]' denotes the Teichmuller lift of a residue-field element x.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hw/errors.hpp"
#include "hw/rational.hpp"

namespace hw::expr {

struct Node {
    enum class Kind { Num, Sym, Neg, Add, Sub, Mul, Div, Pow, Teich };
    Kind kind;
    Int num;          // Num
    std::string name; // Sym
    Rat exponent;     // Pow
    std::vector<std::shared_ptr<const Node>> kids;
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr parse(std::string_view text);

/// Renders the tree back to text (fully parenthesized where needed).
std::string render(const Node& n);

/// Evaluates with an environment providing the ring operations:
///   T from_int(const Int&), T symbol(const std::string&),
///   T add(T,T), T sub(T,T), T mul(T,T), T neg(T), T div(T,T),
///   T pow(T, const Rat&), T teich(const Node&).
template <class T, class Env>
T eval(const Node& n, Env& env) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::Num: return env.from_int(n.num);
        case K::Sym: return env.symbol(n.name);
        case K::Neg: return env.neg(eval<T>(*n.kids[0], env));
        case K::Add: return env.add(eval<T>(*n.kids[0], env), eval<T>(*n.kids[1], env));
        case K::Sub: return env.sub(eval<T>(*n.kids[0], env), eval<T>(*n.kids[1], env));
        case K::Mul: return env.mul(eval<T>(*n.kids[0], env), eval<T>(*n.kids[1], env));
        case K::Div: return env.div(eval<T>(*n.kids[0], env), eval<T>(*n.kids[1], env));
        case K::Pow: return env.pow(eval<T>(*n.kids[0], env), n.exponent);
        case K::Teich: return env.teich(*n.kids[0]);
    }
    throw DomainError("unreachable expression node");
}

}  // namespace hw::expr
