#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "avgctl/linops.hpp"

namespace avgctl::expr {

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'
//           | '-' factor | factor '^' INT
// Identifiers are u1..uk, y1..ym, z1..zn plus the calls
// sin/cos/tanh/atan/abs (unary) and min/max (binary).

struct Dims {
    int k = 0;  // control dimension (u)
    int m = 0;  // fast-state dimension (y)
    int n = 0;  // slow-state dimension (z)
};

enum class Op {
    Const,
    Var,
    Neg,
    Sin,
    Cos,
    Tanh,
    Atan,
    Abs,
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    PowInt,
};

enum class VarKind { U, Y, Z };

struct Node {
    Op op = Op::Const;
    double value = 0.0;      // Const
    VarKind var_kind = VarKind::U;
    int var_index = 0;       // 0-based, Var
    int ipow = 0;            // PowInt exponent
    int a = -1;              // child indices into the arena
    int b = -1;
};

// Value-semantic expression tree; nodes live in a flat arena.
struct Tree {
    std::vector<Node> nodes;
    int root = -1;
    std::string source;  // original text, kept for diagnostics
};

Tree parse(std::string_view text, Dims dims);

// Canonical printing; parse(print(t)) reproduces t and printing is a fixed
// point of parse-then-print.
std::string print(const Tree& t);

double eval(const Tree& t, const Vector& u, const Vector& y, const Vector& z);

// Whether any node references a variable of the given kind.
bool depends_on(const Tree& t, VarKind kind);

}  // namespace avgctl::expr
