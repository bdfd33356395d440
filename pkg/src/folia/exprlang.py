"""Small expression language for scalar fields in scene files.

Grammar (standard precedence, ``^`` right-associative and binding tighter
than unary minus)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"

Constants ``pi`` and ``e`` are recognized.  Function names come from the
fixed primitive table of :mod:`folia.jets`.  Every variable must be a
declared chart coordinate or a declared parameter; anything else is an
error carrying its byte offset.
"""

import math
import re

from . import jets
from .errors import ExprError, FoliaError

__all__ = ["parse", "Ast", "Const", "Var", "Unary", "Binary", "Call", "eval_ast"]

_CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class Ast:
    """Base node; subclasses carry their source byte offset for diagnostics."""

    __slots__ = ("offset",)

    def variables(self):
        out = set()
        self._collect(out)
        return out

    def _collect(self, out):
        pass


class Const(Ast):
    __slots__ = ("value",)

    def __init__(self, value, offset):
        self.value = value
        self.offset = offset

    def __str__(self):
        return repr(self.value)


class Var(Ast):
    __slots__ = ("name",)

    def __init__(self, name, offset):
        self.name = name
        self.offset = offset

    def _collect(self, out):
        out.add(self.name)

    def __str__(self):
        return self.name


class Unary(Ast):
    __slots__ = ("child",)

    def __init__(self, child, offset):
        self.child = child
        self.offset = offset

    def _collect(self, out):
        self.child._collect(out)

    def __str__(self):
        return f"(-{self.child})"


class Binary(Ast):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right, offset):
        self.op = op
        self.left = left
        self.right = right
        self.offset = offset

    def _collect(self, out):
        self.left._collect(out)
        self.right._collect(out)

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


class Call(Ast):
    __slots__ = ("fn", "args")

    def __init__(self, fn, args, offset):
        self.fn = fn
        self.args = args
        self.offset = offset

    def _collect(self, out):
        for a in self.args:
            a._collect(out)

    def __str__(self):
        return f"{self.fn}({', '.join(str(a) for a in self.args)})"


def _tokenize(src):
    tokens, pos = [], 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            at = len(src) - len(stripped)
            raise ExprError(f"unexpected character {stripped[0]!r}", at + 1)
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, names):
        self.src = src
        self.names = frozenset(names)
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op, what):
        kind, val, off = self.peek()
        if kind == "op" and val == op:
            return self.advance()
        raise ExprError(what, off + 1)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected token {val!r}", off + 1)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Binary(val, node, self.term(), off)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Binary(val, node, self.unary(), off)
            else:
                return node

    def unary(self):
        kind, val, off = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Unary(self.unary(), off)
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            # right-associative; exponent may carry unary minus: x^-2
            return Binary("^", base, self.unary(), off)
        return base

    def atom(self):
        kind, val, off = self.advance()
        if kind == "num":
            return Const(val, off)
        if kind == "name":
            nkind, nval, noff = self.peek()
            if nkind == "op" and nval == "(":
                if val not in jets.PRIMITIVES:
                    raise ExprError(f"unknown function '{val}'", off + 1)
                self.advance()
                args = [self.expr()]
                while True:
                    k2, v2, o2 = self.peek()
                    if k2 == "op" and v2 == ",":
                        self.advance()
                        args.append(self.expr())
                    elif k2 == "op" and v2 == ")":
                        self.advance()
                        break
                    else:
                        raise ExprError("unbalanced parenthesis", o2 + 1)
                arity = jets.PRIMITIVES[val][1]
                if len(args) != arity:
                    raise ExprError(
                        f"'{val}' takes {arity} argument(s), got {len(args)}", off + 1
                    )
                return Call(val, args, off)
            if val in _CONSTANTS:
                return Const(_CONSTANTS[val], off)
            if val not in self.names:
                raise ExprError(f"unknown identifier '{val}'", off + 1)
            return Var(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")", "unbalanced parenthesis")
            return node
        if kind == "end":
            raise ExprError("unexpected end of expression", off + 1)
        raise ExprError(f"unexpected token {val!r}", off + 1)


def parse(src, names):
    """Parse ``src`` against declared variable/parameter ``names``."""
    return _Parser(src, names).parse()


def eval_ast(node, env):
    """Evaluate an Ast in an environment mapping names to jets or floats.

    Jet domain errors are re-raised with the offending node's offset.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise FoliaError(f"unbound variable '{node.name}'") from None
    if isinstance(node, Unary):
        return -eval_ast(node.child, env)
    if isinstance(node, Binary):
        left = eval_ast(node.left, env)
        right = eval_ast(node.right, env)
        try:
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return left / right
            if node.op == "^":
                if isinstance(right, jets.Jet):
                    raise FoliaError("exponent must not depend on chart variables")
                return left ** right
        except ZeroDivisionError:
            raise FoliaError(f"division by zero at offset {node.offset}") from None
        except FoliaError as exc:
            raise FoliaError(f"{exc} at offset {node.offset}") from None
        raise FoliaError(f"unknown operator {node.op!r}")
    if isinstance(node, Call):
        args = [eval_ast(a, env) for a in node.args]
        fn = jets.PRIMITIVES[node.fn][0]
        if not any(isinstance(a, jets.Jet) for a in args):
            return _numeric_call(node.fn, args, node.offset)
        try:
            return fn(*args)
        except FoliaError as exc:
            raise FoliaError(f"{exc} at offset {node.offset}") from None
    raise FoliaError(f"cannot evaluate node {node!r}")


def _numeric_call(name, args, offset):
    import numpy as np

    table = {
        "sin": np.sin, "cos": np.cos, "tan": np.tan, "atan": np.arctan,
        "atan2": np.arctan2, "exp": np.exp, "sqrt": np.sqrt,
        "sinh": np.sinh, "cosh": np.cosh, "abs": np.abs,
    }
    if name == "log":
        if np.any(np.asarray(args[0]) <= 0):
            raise FoliaError(f"domain error in 'log' at offset {offset}")
        return np.log(args[0])
    if name == "sqrt" and np.any(np.asarray(args[0]) < 0):
        raise FoliaError(f"domain error in 'sqrt' at offset {offset}")
    return table[name](*args)
