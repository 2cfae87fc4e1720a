#include "hw/expr.hpp"

#include <cctype>

namespace hw::expr {

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr run() {
        NodePtr n = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return n;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DomainError("expression '" + std::string(s_) + "': " + what + " at offset " + std::to_string(i_));
    }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    bool accept(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    static NodePtr make(Node::Kind k, std::vector<NodePtr> kids) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->kids = std::move(kids);
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make(Node::Kind::Add, {lhs, term()});
            else if (accept('-'))
                lhs = make(Node::Kind::Sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make(Node::Kind::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make(Node::Kind::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Node::Kind::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    Int integer() {
        skip();
        std::size_t start = i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
        if (start == i_) fail("expected integer");
        return Int(std::string(s_.substr(start, i_ - start)));
    }

    Rat exponent() {
        if (accept('(')) {
            bool neg = accept('-');
            Rat r(integer());
            if (accept('/')) {
                Int den = integer();
                if (den == 0) fail("zero denominator");
                r /= den;
            }
            if (!accept(')')) fail("expected ')'");
            r.canonicalize();
            return neg ? Rat(-r) : r;
        }
        bool neg = accept('-');
        Rat r(integer());
        return neg ? Rat(-r) : r;
    }

    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Pow;
            n->exponent = exponent();
            n->kids = {base};
            return n;
        }
        return base;
    }

    NodePtr atom() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end");
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Num;
            n->num = integer();
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i_;
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Sym;
            n->name = std::string(s_.substr(start, i_ - start));
            return n;
        }
        if (accept('(')) {
            NodePtr inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (accept('[')) {
            NodePtr inner = expr();
            if (!accept(']')) fail("expected ']'");
            return make(Node::Kind::Teich, {inner});
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

int prec(const Node& n) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::Add:
        case K::Sub: return 1;
        case K::Mul:
        case K::Div: return 2;
        case K::Neg: return 3;
        case K::Pow: return 4;
        default: return 5;
    }
}

std::string wrap(const Node& n, int min_prec) {
    std::string s = render(n);
    return prec(n) < min_prec ? "(" + s + ")" : s;
}

}  // namespace

NodePtr parse(std::string_view text) { return Parser(text).run(); }

std::string render(const Node& n) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::Num: return n.num.get_str();
        case K::Sym: return n.name;
        case K::Neg: return "-" + wrap(*n.kids[0], 3);
        case K::Add: return wrap(*n.kids[0], 1) + "+" + wrap(*n.kids[1], 2);
        case K::Sub: return wrap(*n.kids[0], 1) + "-" + wrap(*n.kids[1], 2);
        case K::Mul: return wrap(*n.kids[0], 2) + "*" + wrap(*n.kids[1], 3);
        case K::Div: return wrap(*n.kids[0], 2) + "/" + wrap(*n.kids[1], 3);
        case K::Pow: {
            std::string e = to_string(n.exponent);
            if (n.exponent.get_den() != 1 || n.exponent < 0) e = "(" + e + ")";
            return wrap(*n.kids[0], 5) + "^" + e;
        }
        case K::Teich: return "[" + render(*n.kids[0]) + "]";
    }
    return {};
}

}  // namespace hw::expr
