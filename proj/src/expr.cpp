#include "avgctl/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace avgctl::expr {

namespace {

constexpr int kMaxDepth = 64;
constexpr double kDivGuard = 1e-300;

struct Parser {
    std::string_view text;
    Dims dims;
    std::size_t pos = 0;
    Tree tree;

    [[noreturn]] void fail(ParseError::Code code, std::size_t at, const std::string& msg) {
        throw ParseError(code, at, msg);
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    int add(Node n) {
        tree.nodes.push_back(n);
        return static_cast<int>(tree.nodes.size()) - 1;
    }

    int parse_number() {
        skip_ws();
        std::size_t start = pos;
        const char* begin = text.data() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail(ParseError::Code::Syntax, start, "expected a number");
        pos += static_cast<std::size_t>(end - begin);
        Node n;
        n.op = Op::Const;
        n.value = v;
        return add(n);
    }

    // Integer literal for '^', optional leading '-'.
    int parse_int_literal() {
        skip_ws();
        std::size_t start = pos;
        bool neg = false;
        if (pos < text.size() && text[pos] == '-') {
            neg = true;
            ++pos;
        }
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
            fail(ParseError::Code::Syntax, start, "expected an integer exponent after '^'");
        long v = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            v = v * 10 + (text[pos] - '0');
            if (v > 1000000) fail(ParseError::Code::Syntax, start, "exponent too large");
            ++pos;
        }
        if (pos < text.size() && (text[pos] == '.' || text[pos] == 'e' || text[pos] == 'E'))
            fail(ParseError::Code::Syntax, start, "exponent must be an integer");
        return static_cast<int>(neg ? -v : v);
    }

    std::string parse_ident() {
        skip_ws();
        std::size_t start = pos;
        if (pos >= text.size() || !(std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            fail(ParseError::Code::Syntax, start, "expected an identifier");
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        return std::string(text.substr(start, pos - start));
    }

    int make_var(const std::string& name, std::size_t at) {
        char head = name[0];
        VarKind kind;
        int dim;
        switch (head) {
            case 'u': kind = VarKind::U; dim = dims.k; break;
            case 'y': kind = VarKind::Y; dim = dims.m; break;
            case 'z': kind = VarKind::Z; dim = dims.n; break;
            default:
                fail(ParseError::Code::UnknownIdentifier, at, "unknown identifier '" + name + "'");
        }
        for (std::size_t i = 1; i < name.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i])))
                fail(ParseError::Code::UnknownIdentifier, at, "unknown identifier '" + name + "'");
        if (name.size() == 1)
            fail(ParseError::Code::UnknownIdentifier, at, "unknown identifier '" + name + "'");
        int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > dim)
            fail(ParseError::Code::OutOfRangeIndex, at,
                 "index out of range for '" + name + "' (dimension " + std::to_string(dim) + ")");
        Node n;
        n.op = Op::Var;
        n.var_kind = kind;
        n.var_index = idx - 1;
        return add(n);
    }

    int parse_call(const std::string& name, std::size_t at, int depth) {
        Op op;
        int arity;
        if (name == "sin") { op = Op::Sin; arity = 1; }
        else if (name == "cos") { op = Op::Cos; arity = 1; }
        else if (name == "tanh") { op = Op::Tanh; arity = 1; }
        else if (name == "atan") { op = Op::Atan; arity = 1; }
        else if (name == "abs") { op = Op::Abs; arity = 1; }
        else if (name == "min") { op = Op::Min; arity = 2; }
        else if (name == "max") { op = Op::Max; arity = 2; }
        else fail(ParseError::Code::UnknownIdentifier, at, "unknown function '" + name + "'");

        std::vector<int> args;
        if (peek() != ')') {
            args.push_back(parse_expr(depth + 1));
            while (consume(',')) args.push_back(parse_expr(depth + 1));
        }
        std::size_t close_at = pos;
        if (!consume(')')) fail(ParseError::Code::Syntax, close_at, "expected ')'");
        if (static_cast<int>(args.size()) != arity)
            fail(ParseError::Code::ArityMismatch, at,
                 "'" + name + "' takes " + std::to_string(arity) + " argument(s), got " +
                     std::to_string(args.size()));
        Node n;
        n.op = op;
        n.a = args[0];
        if (arity == 2) n.b = args[1];
        return add(n);
    }

    int parse_factor(int depth) {
        if (depth > kMaxDepth)
            fail(ParseError::Code::DepthExceeded, pos, "expression nesting exceeds 64");
        skip_ws();
        std::size_t at = pos;
        int node;
        if (consume('-')) {
            int child = parse_factor(depth + 1);
            Node n;
            n.op = Op::Neg;
            n.a = child;
            node = add(n);
        } else if (consume('(')) {
            node = parse_expr(depth + 1);
            if (!consume(')')) fail(ParseError::Code::Syntax, pos, "expected ')'");
        } else if (pos < text.size() &&
                   (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
            node = parse_number();
        } else {
            std::string ident = parse_ident();
            if (consume('(')) node = parse_call(ident, at, depth);
            else node = make_var(ident, at);
        }
        while (true) {
            skip_ws();
            if (pos < text.size() && text[pos] == '^') {
                ++pos;
                int e = parse_int_literal();
                Node n;
                n.op = Op::PowInt;
                n.a = node;
                n.ipow = e;
                node = add(n);
            } else {
                break;
            }
        }
        return node;
    }

    int parse_term(int depth) {
        if (depth > kMaxDepth)
            fail(ParseError::Code::DepthExceeded, pos, "expression nesting exceeds 64");
        int node = parse_factor(depth + 1);
        while (true) {
            skip_ws();
            if (pos < text.size() && (text[pos] == '*' || text[pos] == '/')) {
                char c = text[pos++];
                int rhs = parse_factor(depth + 1);
                Node n;
                n.op = (c == '*') ? Op::Mul : Op::Div;
                n.a = node;
                n.b = rhs;
                node = add(n);
            } else {
                break;
            }
        }
        return node;
    }

    int parse_expr(int depth) {
        if (depth > kMaxDepth)
            fail(ParseError::Code::DepthExceeded, pos, "expression nesting exceeds 64");
        int node = parse_term(depth + 1);
        while (true) {
            skip_ws();
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
                char c = text[pos++];
                int rhs = parse_term(depth + 1);
                Node n;
                n.op = (c == '+') ? Op::Add : Op::Sub;
                n.a = node;
                n.b = rhs;
                node = add(n);
            } else {
                break;
            }
        }
        return node;
    }
};

// Precedence levels used by the printer: 1 add/sub, 2 mul/div, 4 pow,
// 5 atoms/calls/neg-handled-specially.
int level(const Tree& t, int idx) {
    switch (t.nodes[idx].op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::PowInt: return 4;
        default: return 5;
    }
}

bool is_atomic(const Tree& t, int idx) {
    Op op = t.nodes[idx].op;
    return op == Op::Const || op == Op::Var || op == Op::Sin || op == Op::Cos ||
           op == Op::Tanh || op == Op::Atan || op == Op::Abs || op == Op::Min || op == Op::Max;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void print_node(const Tree& t, int idx, std::string& out);

void print_wrapped(const Tree& t, int idx, std::string& out, bool wrap) {
    if (wrap) out += '(';
    print_node(t, idx, out);
    if (wrap) out += ')';
}

void print_node(const Tree& t, int idx, std::string& out) {
    const Node& n = t.nodes[idx];
    switch (n.op) {
        case Op::Const: out += fmt_double(n.value); break;
        case Op::Var: {
            char head = n.var_kind == VarKind::U ? 'u' : n.var_kind == VarKind::Y ? 'y' : 'z';
            out += head;
            out += std::to_string(n.var_index + 1);
            break;
        }
        case Op::Neg:
            out += '-';
            print_wrapped(t, n.a, out, !is_atomic(t, n.a));
            break;
        case Op::Sin: out += "sin("; print_node(t, n.a, out); out += ')'; break;
        case Op::Cos: out += "cos("; print_node(t, n.a, out); out += ')'; break;
        case Op::Tanh: out += "tanh("; print_node(t, n.a, out); out += ')'; break;
        case Op::Atan: out += "atan("; print_node(t, n.a, out); out += ')'; break;
        case Op::Abs: out += "abs("; print_node(t, n.a, out); out += ')'; break;
        case Op::Min:
        case Op::Max:
            out += (n.op == Op::Min) ? "min(" : "max(";
            print_node(t, n.a, out);
            out += ", ";
            print_node(t, n.b, out);
            out += ')';
            break;
        case Op::Add:
            print_wrapped(t, n.a, out, level(t, n.a) < 1);
            out += " + ";
            print_wrapped(t, n.b, out, level(t, n.b) < 1);
            break;
        case Op::Sub:
            print_wrapped(t, n.a, out, level(t, n.a) < 1);
            out += " - ";
            print_wrapped(t, n.b, out, level(t, n.b) <= 1);
            break;
        case Op::Mul:
            print_wrapped(t, n.a, out, level(t, n.a) < 2);
            out += '*';
            print_wrapped(t, n.b, out, level(t, n.b) < 2);
            break;
        case Op::Div:
            print_wrapped(t, n.a, out, level(t, n.a) < 2);
            out += '/';
            print_wrapped(t, n.b, out, level(t, n.b) <= 2);
            break;
        case Op::PowInt:
            print_wrapped(t, n.a, out, !is_atomic(t, n.a));
            out += '^';
            out += std::to_string(n.ipow);
            break;
    }
}

double eval_node(const Tree& t, int idx, const Vector& u, const Vector& y, const Vector& z) {
    const Node& n = t.nodes[idx];
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var:
            switch (n.var_kind) {
                case VarKind::U: return u(n.var_index);
                case VarKind::Y: return y(n.var_index);
                case VarKind::Z: return z(n.var_index);
            }
            return 0.0;
        case Op::Neg: return -eval_node(t, n.a, u, y, z);
        case Op::Sin: return std::sin(eval_node(t, n.a, u, y, z));
        case Op::Cos: return std::cos(eval_node(t, n.a, u, y, z));
        case Op::Tanh: return std::tanh(eval_node(t, n.a, u, y, z));
        case Op::Atan: return std::atan(eval_node(t, n.a, u, y, z));
        case Op::Abs: return std::abs(eval_node(t, n.a, u, y, z));
        case Op::Add: return eval_node(t, n.a, u, y, z) + eval_node(t, n.b, u, y, z);
        case Op::Sub: return eval_node(t, n.a, u, y, z) - eval_node(t, n.b, u, y, z);
        case Op::Mul: return eval_node(t, n.a, u, y, z) * eval_node(t, n.b, u, y, z);
        case Op::Div: {
            double num = eval_node(t, n.a, u, y, z);
            double den = eval_node(t, n.b, u, y, z);
            if (std::abs(den) < kDivGuard)
                throw EvaluationError("division by near-zero denominator");
            return num / den;
        }
        case Op::Min: return std::min(eval_node(t, n.a, u, y, z), eval_node(t, n.b, u, y, z));
        case Op::Max: return std::max(eval_node(t, n.a, u, y, z), eval_node(t, n.b, u, y, z));
        case Op::PowInt: {
            double base = eval_node(t, n.a, u, y, z);
            int e = n.ipow;
            bool invert = e < 0;
            unsigned long long p = invert ? static_cast<unsigned long long>(-(long long)e)
                                          : static_cast<unsigned long long>(e);
            double acc = 1.0, b = base;
            while (p) {
                if (p & 1ULL) acc *= b;
                b *= b;
                p >>= 1;
            }
            if (invert) {
                if (std::abs(acc) < kDivGuard)
                    throw EvaluationError("negative power of near-zero base");
                return 1.0 / acc;
            }
            return acc;
        }
    }
    return 0.0;
}

}  // namespace

Tree parse(std::string_view text, Dims dims) {
    if (text.empty()) throw ParseError(ParseError::Code::Syntax, 0, "empty expression");
    Parser p;
    p.text = text;
    p.dims = dims;
    p.tree.source = std::string(text);
    p.tree.root = p.parse_expr(0);
    if (!p.at_end())
        throw ParseError(ParseError::Code::Syntax, p.pos,
                         "unexpected trailing input '" + std::string(text.substr(p.pos)) + "'");
    return p.tree;
}

std::string print(const Tree& t) {
    std::string out;
    print_node(t, t.root, out);
    return out;
}

double eval(const Tree& t, const Vector& u, const Vector& y, const Vector& z) {
    return eval_node(t, t.root, u, y, z);
}

bool depends_on(const Tree& t, VarKind kind) {
    for (const Node& n : t.nodes)
        if (n.op == Op::Var && n.var_kind == kind) return true;
    return false;
}

}  // namespace avgctl::expr
