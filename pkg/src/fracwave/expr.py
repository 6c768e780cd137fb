"""A tiny computer-algebra kernel for rational expressions over trace atoms.

Expressions are immutable trees with nodes ``Const``, ``Atom``, ``Sum``,
``Prod`` and ``Pow`` (integer exponent; a negative exponent is a
reciprocal).  The smart constructors :func:`add`, :func:`mul` and
:func:`power` fold constants and flatten nested sums/products, nothing
more.  Trees can be differentiated along a user supplied time-derivative
rule for atoms, differentiated with respect to an atom, evaluated, dumped to
a prefix notation and compiled to straight-line Python.

Prefix grammar of :func:`to_prefix` / :func:`parse_prefix`::

    expr  := number | atom | "(" op expr+ ")" | "(^" expr int ")"
    op    := "+" | "*"
    atom  := ("v" | "s") int          e.g. v0, s3 : d^j v / dx^j, d^j sigma / dx^j
    number:= float literal, always written with repr()
"""

from __future__ import annotations

import math
import re
from typing import Callable, Iterable, Sequence


class Expr:
    __slots__ = ("_hash",)

    def __add__(self, other):
        return add(self, _lift(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), _lift(other)))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return to_prefix(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)
        self._hash = hash(("c", self.value))

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value

    __hash__ = Expr.__hash__


class Atom(Expr):
    """One-sided trace d^order f / dx^order with f in {"v", "s"}."""

    __slots__ = ("name", "order")

    def __init__(self, name: str, order: int):
        if name not in ("v", "s"):
            raise ValueError(f"unknown atom field {name!r}")
        self.name = name
        self.order = int(order)
        self._hash = hash(("a", name, self.order))

    def __eq__(self, other):
        return (isinstance(other, Atom) and other.name == self.name
                and other.order == self.order)

    __hash__ = Expr.__hash__


class _NAry(Expr):
    __slots__ = ("args",)
    tag = ""

    def __init__(self, args: Sequence[Expr]):
        self.args = tuple(args)
        self._hash = hash((self.tag, self.args))

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is type(self) and other._hash == self._hash
                and other.args == self.args)

    __hash__ = Expr.__hash__


class Sum(_NAry):
    __slots__ = ()
    tag = "+"


class Prod(_NAry):
    __slots__ = ()
    tag = "*"


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self.base = base
        self.exp = int(exp)
        self._hash = hash(("^", base, self.exp))

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, Pow) and other._hash == self._hash
                and other.exp == self.exp and other.base == self.base)

    __hash__ = Expr.__hash__


ZERO = Const(0.0)
ONE = Const(1.0)


def _lift(x) -> Expr:
    return x if isinstance(x, Expr) else Const(x)


def add(*terms) -> Expr:
    flat: list[Expr] = []
    total = 0.0
    for t in map(_lift, terms):
        for u in (t.args if isinstance(t, Sum) else (t,)):
            if isinstance(u, Const):
                total += u.value
            else:
                flat.append(u)
    if total != 0.0:
        flat.append(Const(total))
    if not flat:
        return ZERO
    return flat[0] if len(flat) == 1 else Sum(flat)


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    coeff = 1.0
    for f in map(_lift, factors):
        for u in (f.args if isinstance(f, Prod) else (f,)):
            if isinstance(u, Const):
                coeff *= u.value
            else:
                flat.append(u)
    if coeff == 0.0:
        return ZERO
    if coeff != 1.0:
        flat.insert(0, Const(coeff))
    if not flat:
        return Const(coeff)
    return flat[0] if len(flat) == 1 else Prod(flat)


def power(base, exp: int) -> Expr:
    base = _lift(base)
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** exp)
    if isinstance(base, Pow):
        return power(base.base, base.exp * exp)
    return Pow(base, exp)


# -- calculus -----------------------------------------------------------------

def _derivative(e: Expr, leaf: Callable[[Atom], Expr], memo: dict) -> Expr:
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = ZERO
    elif isinstance(e, Atom):
        out = leaf(e)
    elif isinstance(e, Sum):
        out = add(*(_derivative(t, leaf, memo) for t in e.args))
    elif isinstance(e, Prod):
        terms = []
        for i, f in enumerate(e.args):
            df = _derivative(f, leaf, memo)
            if df == ZERO:
                continue
            terms.append(mul(*e.args[:i], df, *e.args[i + 1:]))
        out = add(*terms)
    elif isinstance(e, Pow):
        db = _derivative(e.base, leaf, memo)
        out = ZERO if db == ZERO else mul(Const(e.exp), power(e.base, e.exp - 1), db)
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[e] = out
    return out


def time_derivative(e: Expr, rule: Callable[[Atom], Expr]) -> Expr:
    """d/dt of ``e`` given d/dt of every atom via ``rule``."""
    return _derivative(e, rule, {})


def partial(e: Expr, wrt: Atom) -> Expr:
    return _derivative(e, lambda a: ONE if a == wrt else ZERO, {})


def atoms(e: Expr) -> set[Atom]:
    found: set[Atom] = set()
    stack = [e]
    seen: set[int] = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Atom):
            found.add(node)
        elif isinstance(node, _NAry):
            stack.extend(node.args)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return found


def substitute(e: Expr, values: dict[Atom, Expr]) -> Expr:
    """Replace atoms (e.g. by ZERO) and re-fold constants."""
    memo: dict = {}

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Atom):
            out = _lift(values.get(node, node))
        elif isinstance(node, Sum):
            out = add(*map(walk, node.args))
        elif isinstance(node, Prod):
            out = mul(*map(walk, node.args))
        elif isinstance(node, Pow):
            out = power(walk(node.base), node.exp)
        else:
            out = node
        memo[node] = out
        return out

    return walk(e)


def evaluate(e: Expr, env: dict[Atom, float]) -> float:
    """Reference tree-walking evaluator (slow; compiled code is used in loops)."""
    memo: dict[int, float] = {}

    def walk(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Atom):
            out = env.get(node, 0.0)
        elif isinstance(node, Sum):
            out = math.fsum(walk(t) for t in node.args)
        elif isinstance(node, Prod):
            out = 1.0
            for f in node.args:
                out *= walk(f)
        elif isinstance(node, Pow):
            out = walk(node.base) ** node.exp
        else:
            raise TypeError(type(node))
        memo[key] = out
        return out

    return walk(e)


def count_nodes(e: Expr) -> int:
    """Number of distinct nodes in the DAG."""
    seen: set = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        if isinstance(node, _NAry):
            stack.extend(node.args)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return len(seen)


# -- text form ----------------------------------------------------------------

def to_prefix(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Atom):
        return f"{e.name}{e.order}"
    if isinstance(e, _NAry):
        return "(" + e.tag + " " + " ".join(to_prefix(a) for a in e.args) + ")"
    if isinstance(e, Pow):
        return f"(^ {to_prefix(e.base)} {e.exp})"
    raise TypeError(type(e))


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_prefix(text: str) -> Expr:
    tokens = _TOKEN.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            op = tokens[pos]
            pos += 1
            args = []
            while tokens[pos] != ")":
                args.append(parse())
            pos += 1
            if op == "+":
                return Sum(args) if len(args) > 1 else args[0]
            if op == "*":
                return Prod(args) if len(args) > 1 else args[0]
            if op == "^":
                return Pow(args[0], int(args[1].value))
            raise ValueError(f"unknown operator {op!r}")
        m = re.fullmatch(r"([vs])(\d+)", tok)
        if m:
            return Atom(m.group(1), int(m.group(2)))
        return Const(float(tok))

    out = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in prefix expression")
    return out


# -- code generation ----------------------------------------------------------

def compile_exprs(exprs: Iterable[Expr], atom_index: dict[Atom, int],
                  name: str = "_generated") -> Callable:
    """Compile expressions into ``f(a) -> list[float]`` with shared subexpressions.

    ``a`` is an indexable of atom values laid out by ``atom_index``.
    """
    exprs = list(exprs)
    lines: list[str] = []
    names: dict[Expr, str] = {}

    def emit(node: Expr) -> str:
        hit = names.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            return repr(node.value)
        if isinstance(node, Atom):
            ref = f"a[{atom_index[node]}]"
            names[node] = ref
            return ref
        if isinstance(node, Sum):
            rhs = " + ".join(emit(t) for t in node.args)
        elif isinstance(node, Prod):
            rhs = " * ".join(emit(f) for f in node.args)
        elif isinstance(node, Pow):
            b = emit(node.base)
            rhs = f"{b} ** {node.exp}" if node.exp > 0 else f"1.0 / {b} ** {-node.exp}"
        else:  # pragma: no cover
            raise TypeError(type(node))
        var = f"t{len(lines)}"
        lines.append(f"    {var} = {rhs}")
        names[node] = var
        return var

    outs = [emit(e) for e in exprs]
    src = f"def {name}(a):\n" + "\n".join(lines) + f"\n    return [{', '.join(outs)}]\n"
    namespace: dict = {}
    exec(compile(src, f"<{name}>", "exec"), namespace)
    fn = namespace[name]
    fn.source = src
    return fn
