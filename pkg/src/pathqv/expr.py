"""A small recursive-descent parser for field and drift expressions.

Grammar (usual precedence, ^ binds tightest and is right-associative):

    expr  :=  term  (('+' | '-') term)*
    term  :=  unary (('*' | '/') unary)*
    unary :=  '-' unary | power
    power :=  atom ('^' unary)?
    atom  :=  NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names resolve to the functions sin, cos, sinh, exp, sqrt, the constants
pi and e, or a declared variable (typically t and xi).  Expressions
evaluate with numpy semantics and can be differentiated symbolically,
which is how user-supplied volatility fields get exact partial
derivatives; powers with non-constant exponents have no derivative rule
here and are rejected when differentiated.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import DomainError

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "exp": np.exp,
    "sqrt": np.sqrt,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


def _tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN.match(src, pos)
        if match is None:
            rest = src[pos:].lstrip()
            if not rest:
                break
            raise DomainError(f"unexpected character {rest[0]!r} in expression {src!r}")
        pos = match.end()
        if match.lastgroup == "num":
            tokens.append(("num", float(match.group("num"))))
        elif match.lastgroup == "name":
            tokens.append(("name", match.group("name")))
        else:
            tokens.append(("op", match.group("op")))
    tokens.append(("end", None))
    return tokens


class _Parser:
    def __init__(self, src, variables):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.variables = frozenset(variables)

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value = self.take()
        if kind != "op" or value != op:
            raise DomainError(f"expected {op!r} in expression {self.src!r}")

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise DomainError(f"trailing input in expression {self.src!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            return ("pow", base, self.unary())
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return ("num", value)
        if kind == "name":
            if self.peek() == ("op", "("):
                if value not in _FUNCTIONS:
                    raise DomainError(f"unknown function {value!r} in {self.src!r}")
                self.take()
                arg = self.expr()
                self.expect_op(")")
                return ("call", value, arg)
            if value in _CONSTANTS:
                return ("num", _CONSTANTS[value])
            if value in self.variables:
                return ("var", value)
            raise DomainError(
                f"unknown name {value!r} in {self.src!r} "
                f"(variables here: {', '.join(sorted(self.variables))})"
            )
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise DomainError(f"unexpected token in expression {self.src!r}")


def _eval(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_eval(node[1], env)
    if tag == "add":
        return _eval(node[1], env) + _eval(node[2], env)
    if tag == "sub":
        return _eval(node[1], env) - _eval(node[2], env)
    if tag == "mul":
        return _eval(node[1], env) * _eval(node[2], env)
    if tag == "div":
        return _eval(node[1], env) / _eval(node[2], env)
    if tag == "pow":
        return _eval(node[1], env) ** _eval(node[2], env)
    if tag == "call":
        return _FUNCTIONS[node[1]](_eval(node[2], env))
    raise AssertionError(f"bad node {node!r}")


def _is_const(node):
    tag = node[0]
    if tag == "num":
        return True
    if tag == "var":
        return False
    if tag == "call":
        return _is_const(node[2])
    if tag == "neg":
        return _is_const(node[1])
    return _is_const(node[1]) and _is_const(node[2])


# folding constructors keep derivative trees small
def _num(v):
    return ("num", float(v))


def _add(a, b):
    if a == ("num", 0.0):
        return b
    if b == ("num", 0.0):
        return a
    return ("add", a, b)


def _sub(a, b):
    if b == ("num", 0.0):
        return a
    if a == ("num", 0.0):
        return ("neg", b)
    return ("sub", a, b)


def _mul(a, b):
    if a == ("num", 0.0) or b == ("num", 0.0):
        return _num(0.0)
    if a == ("num", 1.0):
        return b
    if b == ("num", 1.0):
        return a
    return ("mul", a, b)


def _div(a, b):
    if a == ("num", 0.0):
        return _num(0.0)
    if b == ("num", 1.0):
        return a
    return ("div", a, b)


def _diff(node, var):
    tag = node[0]
    if tag == "num":
        return _num(0.0)
    if tag == "var":
        return _num(1.0 if node[1] == var else 0.0)
    if tag == "neg":
        return ("neg", _diff(node[1], var))
    if tag == "add":
        return _add(_diff(node[1], var), _diff(node[2], var))
    if tag == "sub":
        return _sub(_diff(node[1], var), _diff(node[2], var))
    if tag == "mul":
        a, b = node[1], node[2]
        return _add(_mul(_diff(a, var), b), _mul(a, _diff(b, var)))
    if tag == "div":
        a, b = node[1], node[2]
        return _div(_sub(_mul(_diff(a, var), b), _mul(a, _diff(b, var))), ("pow", b, _num(2.0)))
    if tag == "pow":
        base, expo = node[1], node[2]
        if not _is_const(expo):
            raise DomainError("cannot differentiate a power with non-constant exponent")
        c = _eval(expo, {})
        return _mul(_mul(_num(c), ("pow", base, _num(c - 1.0))), _diff(base, var))
    if tag == "call":
        fname, arg = node[1], node[2]
        da = _diff(arg, var)
        if fname == "sin":
            return _mul(("call", "cos", arg), da)
        if fname == "cos":
            return ("neg", _mul(("call", "sin", arg), da))
        if fname == "exp":
            return _mul(node, da)
        if fname == "sqrt":
            return _div(da, _mul(_num(2.0), node))
        if fname == "sinh":
            # cosh is not in the grammar; use (exp(u) + exp(-u)) / 2
            cosh = _div(_add(("call", "exp", arg), ("call", "exp", ("neg", arg))), _num(2.0))
            return _mul(cosh, da)
    raise AssertionError(f"bad node {node!r}")


class Expression:
    """A parsed expression over a fixed variable tuple."""

    def __init__(self, src, variables=("t", "xi"), _ast=None):
        self.src = src
        self.variables = tuple(variables)
        self.ast = _ast if _ast is not None else _Parser(src, self.variables).parse()

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise DomainError(
                f"expression over {self.variables} called with {len(args)} arguments"
            )
        env = dict(zip(self.variables, args))
        out = _eval(self.ast, env)
        shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
        if np.shape(out) != shape:
            out = np.broadcast_to(np.asarray(out, dtype=np.float64), shape).copy()
        return out

    def diff(self, var):
        if var not in self.variables:
            raise DomainError(f"{var!r} is not a variable of this expression")
        return Expression(f"d/d{var}({self.src})", self.variables, _ast=_diff(self.ast, var))

    def is_constant(self):
        return _is_const(self.ast)


def evaluate_constant(src):
    """Evaluate a closed expression (no variables), e.g. "10*e" for alpha."""
    return float(Expression(src, variables=()).__call__())


def scalar_function(src, var="t"):
    """Compile an expression of one variable into a numpy-vectorized callable."""
    return Expression(src, variables=(var,))


def field_from_expression(src):
    """Build a volatility field sigma(t, xi) from an expression string.

    The partial derivatives come from symbolic differentiation of the
    parsed tree (so they satisfy the field's finite-difference check by
    construction), and the declared sup-bounds are sampled on the box
    [0, 1] x [-8, 8].
    """
    from .flow import VolatilityField

    sigma = Expression(src, ("t", "xi"))
    d_t = sigma.diff("t")
    d_xi = sigma.diff("xi")
    tt, xx = np.meshgrid(np.linspace(0.0, 1.0, 41), np.linspace(-8.0, 8.0, 65))
    sup_t = float(np.max(np.abs(d_t(tt, xx))))
    sup_xi = float(np.max(np.abs(d_xi(tt, xx))))
    return VolatilityField(
        sigma=sigma, sigma_t=d_t, sigma_xi=d_xi,
        sup_sigma_t=sup_t, sup_sigma_xi=sup_xi, name=src,
    )
