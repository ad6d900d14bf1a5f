"""Piecewise-smooth expressions and their first-order calculus.

An expression is built from smooth nodes and the three kink nodes ``Abs``,
``Max`` and ``Min`` whose arguments are themselves smooth.  Near a point the
expression is a smooth function of ``x`` and of the kink nodes, and each kink
node selects one of finitely many smooth branches.  Subdifferentials are
computed by enumerating the activity patterns of the kink nodes that are
realizable at nearby points, and taking the union of the regular
subdifferentials on those patterns.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedExpressionError
from .linprog import solve_lp
from .polytope import PolyUnion, intersect_polytopes

ACTIVE_TOL = 1e-12
COEF_TOL = 1e-13


class Expr:
    """Base class of all expression nodes."""

    kink = False

    def __add__(self, other):
        other = as_expr(other)
        left = self.terms if isinstance(self, Sum) else (self,)
        right = other.terms if isinstance(other, Sum) else (other,)
        return Sum(left + right)

    def __radd__(self, other):
        return as_expr(other) + self

    def __neg__(self):
        return Product(Const(-1.0), self)

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        return Product(self, as_expr(other))

    def __rmul__(self, other):
        return Product(as_expr(other), self)

    def __pow__(self, k):
        return IntPow(self, int(k))

    def children(self):
        return ()

    @property
    def is_smooth(self):
        return not self.kink and all(c.is_smooth for c in self.children())

    def to_json(self):
        raise NotImplementedError

    def __call__(self, x):
        return evaluate(self, x)


def as_expr(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, np.integer, np.floating)):
        return Const(float(v))
    raise UnsupportedExpressionError(f"cannot convert {v!r} to an expression")


def _check_smooth_args(name, args):
    for a in args:
        if not isinstance(a, Expr):
            raise UnsupportedExpressionError(f"{name} argument is not an expression")
        if not a.is_smooth:
            raise UnsupportedExpressionError(
                f"{name} argument contains a nonsmooth node; nested nonsmoothness is not supported")


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def to_json(self):
        return {"op": "const", "value": self.value}


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise UnsupportedExpressionError("variable index must be nonnegative")

    def to_json(self):
        return {"op": "var", "index": self.index}


@dataclass(frozen=True, eq=True)
class Affine(Expr):
    coeffs: tuple
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "offset", float(self.offset))

    def to_json(self):
        return {"op": "affine", "coeffs": list(self.coeffs), "offset": self.offset}


@dataclass(frozen=True, eq=True)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise UnsupportedExpressionError("empty sum")

    def children(self):
        return self.terms

    def to_json(self):
        return {"op": "sum", "args": [t.to_json() for t in self.terms]}


@dataclass(frozen=True, eq=True)
class Product(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)

    def to_json(self):
        if self.left == Const(-1.0):
            return {"op": "neg", "arg": self.right.to_json()}
        return {"op": "mul", "args": [self.left.to_json(), self.right.to_json()]}


@dataclass(frozen=True, eq=True)
class IntPow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise UnsupportedExpressionError("exponent must be an integer >= 1")

    def children(self):
        return (self.base,)

    def to_json(self):
        return {"op": "pow", "arg": self.base.to_json(), "exp": self.exponent}


@dataclass(frozen=True, eq=True)
class Sqrt(Expr):
    """Square root on ``[tau0, inf)``.

    With ``extend=True`` the function continues below ``tau0`` by its tangent
    line, which keeps it C^1 on the whole line (requires ``tau0 > 0``).
    """

    arg: Expr
    tau0: float = 0.0
    extend: bool = False

    def __post_init__(self):
        if self.tau0 < 0 or (self.extend and self.tau0 <= 0):
            raise UnsupportedExpressionError("sqrt needs tau0 >= 0 (and > 0 when extended)")

    def children(self):
        return (self.arg,)

    def to_json(self):
        return {"op": "sqrt", "arg": self.arg.to_json(), "tau0": self.tau0, "extend": self.extend}


@dataclass(frozen=True, eq=True)
class Spline(Expr):
    """Piecewise polynomial of its argument.

    ``pieces[i]`` holds ascending monomial coefficients valid on
    ``[knots[i-1], knots[i]]``; the outer pieces extend to infinity.  Values
    and first derivatives must agree at every knot.
    """

    arg: Expr
    knots: tuple
    pieces: tuple

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        pieces = tuple(tuple(float(c) for c in p) for p in self.pieces)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "pieces", pieces)
        if len(pieces) != len(knots) + 1:
            raise UnsupportedExpressionError("spline needs one more piece than knots")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise UnsupportedExpressionError("spline knots must increase")
        for i, t in enumerate(knots):
            lv, ld = _poly(pieces[i], t)
            rv, rd = _poly(pieces[i + 1], t)
            scale = 1.0 + abs(lv) + abs(ld)
            if abs(lv - rv) > 1e-9 * scale or abs(ld - rd) > 1e-9 * scale:
                raise UnsupportedExpressionError(f"spline is not C^1 at knot {t}")

    def children(self):
        return (self.arg,)

    def to_json(self):
        return {"op": "spline", "arg": self.arg.to_json(), "knots": list(self.knots),
                "pieces": [list(p) for p in self.pieces]}


@dataclass(frozen=True, eq=True)
class Abs(Expr):
    arg: Expr
    kink = True

    def __post_init__(self):
        _check_smooth_args("abs", [self.arg])

    def children(self):
        return (self.arg,)

    @property
    def branches(self):
        return (1, -1)

    def to_json(self):
        return {"op": "abs", "arg": self.arg.to_json()}


@dataclass(frozen=True, eq=True)
class Max(Expr):
    args: tuple
    kink = True

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(as_expr(a) for a in self.args))
        if len(self.args) < 1:
            raise UnsupportedExpressionError("max needs at least one argument")
        _check_smooth_args("max", self.args)

    def children(self):
        return self.args

    @property
    def branches(self):
        return tuple(range(len(self.args)))

    def to_json(self):
        return {"op": "max", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True, eq=True)
class Min(Expr):
    args: tuple
    kink = True

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(as_expr(a) for a in self.args))
        if len(self.args) < 1:
            raise UnsupportedExpressionError("min needs at least one argument")
        _check_smooth_args("min", self.args)

    def children(self):
        return self.args

    @property
    def branches(self):
        return tuple(range(len(self.args)))

    def to_json(self):
        return {"op": "min", "args": [a.to_json() for a in self.args]}


def var(i):
    return Var(i)


def smax(*args):
    return Max(tuple(as_expr(a) for a in args))


def smin(*args):
    return Min(tuple(as_expr(a) for a in args))


def _poly(coeffs, t):
    val = 0.0
    der = 0.0
    for c in reversed(coeffs):
        der = der * t + val
        val = val * t + c
    return val, der


# ---------------------------------------------------------------- JSON

def from_json(obj, path="$"):
    """Build an expression from its JSON tree; raises on schema or class errors."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Const(float(obj))
    if not isinstance(obj, dict) or "op" not in obj:
        raise UnsupportedExpressionError(f"{path}: expected an object with an 'op' field")
    op = obj["op"]

    def need(key):
        if key not in obj:
            raise UnsupportedExpressionError(f"{path}: '{op}' node lacks field '{key}'")
        return obj[key]

    try:
        if op == "const":
            return Const(float(need("value")))
        if op == "var":
            return Var(int(need("index")))
        if op == "affine":
            return Affine(tuple(need("coeffs")), float(obj.get("offset", 0.0)))
        if op == "sum":
            return Sum(tuple(from_json(a, f"{path}.args[{i}]") for i, a in enumerate(need("args"))))
        if op == "mul":
            args = need("args")
            if len(args) != 2:
                raise UnsupportedExpressionError(f"{path}: 'mul' takes exactly two args")
            return Product(from_json(args[0], f"{path}.args[0]"), from_json(args[1], f"{path}.args[1]"))
        if op == "neg":
            return Product(Const(-1.0), from_json(need("arg"), f"{path}.arg"))
        if op == "pow":
            return IntPow(from_json(need("arg"), f"{path}.arg"), int(need("exp")))
        if op == "sqrt":
            return Sqrt(from_json(need("arg"), f"{path}.arg"), float(obj.get("tau0", 0.0)),
                        bool(obj.get("extend", False)))
        if op == "spline":
            return Spline(from_json(need("arg"), f"{path}.arg"), tuple(need("knots")),
                          tuple(tuple(p) for p in need("pieces")))
        if op == "abs":
            return Abs(from_json(need("arg"), f"{path}.arg"))
        if op == "max":
            return Max(tuple(from_json(a, f"{path}.args[{i}]") for i, a in enumerate(need("args"))))
        if op == "min":
            return Min(tuple(from_json(a, f"{path}.args[{i}]") for i, a in enumerate(need("args"))))
    except UnsupportedExpressionError as exc:
        msg = str(exc)
        if not msg.startswith("$"):
            msg = f"{path}: {msg}"
        raise UnsupportedExpressionError(msg) from None
    raise UnsupportedExpressionError(f"{path}: unknown op '{op}'")


def max_var_index(e):
    best = -1
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            best = max(best, node.index)
        elif isinstance(node, Affine):
            best = max(best, len(node.coeffs) - 1)
        stack.extend(node.children())
    return best


def kink_nodes(e):
    """Distinct kink nodes of ``e`` in depth-first order (structural equality)."""
    seen = []
    stack = [e]
    while stack:
        node = stack.pop()
        if node.kink:
            if node not in seen:
                seen.append(node)
            continue
        stack.extend(reversed(node.children()))
    return seen


def _degree(e):
    """Polynomial degree bound; ``inf`` for genuinely nonlinear primitives."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, (Var, Affine)):
        return 1
    if isinstance(e, Sum):
        return max(_degree(t) for t in e.terms)
    if isinstance(e, Product):
        return _degree(e.left) + _degree(e.right)
    if isinstance(e, IntPow):
        return _degree(e.base) * e.exponent
    if isinstance(e, (Sqrt, Spline)):
        return 0 if _degree(e.arg) == 0 else math.inf
    return max(_degree(c) for c in e.children())


def is_piecewise_affine(e):
    return _degree(e) <= 1


# ---------------------------------------------------------------- forward mode

class _Forward:
    """Vectorized forward-mode evaluation on a batch of points.

    ``leaf`` may intercept kink nodes and return their ``(value, grad)``.
    """

    def __init__(self, X, gdim, leaf=None, check_domain=True):
        self.X = X
        self.N, self.n = X.shape
        self.gdim = gdim
        self.leaf = leaf
        self.check_domain = check_domain
        self.memo = {}

    def run(self, e):
        key = id(e)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._eval(e)
        self.memo[key] = out
        return out

    def _zeros(self):
        return np.zeros((self.N, self.gdim))

    def _eval(self, e):
        X = self.X
        if isinstance(e, Const):
            return np.full(self.N, e.value), self._zeros()
        if isinstance(e, Var):
            if e.index >= self.n:
                raise UnsupportedExpressionError(f"variable x{e.index} exceeds dimension {self.n}")
            g = self._zeros()
            g[:, e.index] = 1.0
            return X[:, e.index].copy(), g
        if isinstance(e, Affine):
            a = np.asarray(e.coeffs)
            if len(a) > self.n:
                raise UnsupportedExpressionError("affine node longer than the input dimension")
            g = self._zeros()
            g[:, :len(a)] = a
            return X[:, :len(a)] @ a + e.offset, g
        if isinstance(e, Sum):
            val = np.zeros(self.N)
            g = self._zeros()
            for t in e.terms:
                v, gt = self.run(t)
                val = val + v
                g = g + gt
            return val, g
        if isinstance(e, Product):
            lv, lg = self.run(e.left)
            rv, rg = self.run(e.right)
            return lv * rv, lg * rv[:, None] + rg * lv[:, None]
        if isinstance(e, IntPow):
            bv, bg = self.run(e.base)
            k = e.exponent
            return bv ** k, (k * bv ** (k - 1))[:, None] * bg
        if isinstance(e, Sqrt):
            u, ug = self.run(e.arg)
            if e.extend:
                r0 = math.sqrt(e.tau0)
                hi = u >= e.tau0
                safe = np.where(hi, u, e.tau0)
                val = np.where(hi, np.sqrt(safe), r0 + (u - e.tau0) / (2 * r0))
                der = np.where(hi, 0.5 / np.sqrt(safe), 0.5 / r0)
            else:
                if self.check_domain and np.any(u < e.tau0 - 1e-15):
                    raise DomainError(f"sqrt evaluated below its domain start {e.tau0}")
                safe = np.maximum(u, 0.0)
                val = np.sqrt(safe)
                with np.errstate(divide="ignore"):
                    der = np.where(safe > 0, 0.5 / np.where(safe > 0, np.sqrt(safe), 1.0), np.inf)
                if self.check_domain and np.any(~np.isfinite(der) & np.any(ug != 0, axis=1)):
                    raise DomainError("sqrt is not differentiable at 0")
                der = np.where(np.isfinite(der), der, 0.0)
            return val, der[:, None] * ug
        if isinstance(e, Spline):
            u, ug = self.run(e.arg)
            idx = np.searchsorted(np.asarray(e.knots), u, side="right")
            val = np.empty(self.N)
            der = np.empty(self.N)
            for p in range(self.N):
                val[p], der[p] = _poly(e.pieces[idx[p]], u[p])
            return val, der[:, None] * ug
        if e.kink:
            if self.leaf is not None:
                hit = self.leaf(e, self)
                if hit is not None:
                    return hit
            return self._kink_default(e)
        raise UnsupportedExpressionError(f"unsupported node {type(e).__name__}")

    def _kink_default(self, e):
        if isinstance(e, Abs):
            u, ug = self.run(e.arg)
            s = np.where(u >= 0, 1.0, -1.0)
            return np.abs(u), s[:, None] * ug
        vals, grads = zip(*(self.run(a) for a in e.args))
        V = np.stack(vals, axis=1)
        pick = np.argmax(V, axis=1) if isinstance(e, Max) else np.argmin(V, axis=1)
        G = np.stack(grads, axis=1)
        rows = np.arange(self.N)
        return V[rows, pick], G[rows, pick]


def _as_batch(X, n=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    return X


def evaluate(e, x):
    """Value of ``e`` at a single point."""
    X = _as_batch(x)
    val, _ = _Forward(X, X.shape[1]).run(e)
    return float(val[0])


def evaluate_batch(e, X, check_domain=True):
    X = _as_batch(X)
    val, _ = _Forward(X, X.shape[1], check_domain=check_domain).run(e)
    return val


def value_and_grad(e, x):
    """Value and one branch gradient (the gradient when ``e`` is smooth at ``x``)."""
    X = _as_batch(x)
    val, g = _Forward(X, X.shape[1]).run(e)
    return float(val[0]), g[0].copy()


def grad_batch(e, X, check_domain=True):
    X = _as_batch(X)
    val, g = _Forward(X, X.shape[1], check_domain=check_domain).run(e)
    return val, g


def gradient(e, x):
    return value_and_grad(e, x)[1]


# ---------------------------------------------------------------- local structure

@dataclass
class KinkInfo:
    """Branch data of one kink node at a point.

    ``grads[s]`` is the gradient of the branch ``s`` (for ``Abs`` the branches
    are ``+1`` and ``-1``, i.e. ``+u`` and ``-u``); ``coef`` is the partial
    derivative of the surrounding smooth expression with respect to the node.
    """

    node: Expr
    kind: str
    coef: float
    active: tuple
    grads: dict

    def picks_max(self):
        return self.kind in ("abs", "max")


def local_structure(e, x, tol=ACTIVE_TOL):
    """Return ``(grad_phi, infos)`` describing ``e`` near ``x``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    nodes = kink_nodes(e)
    m = len(nodes)
    X = x[None, :]
    inner = _Forward(X, n)
    infos = []
    node_values = []
    for node in nodes:
        if isinstance(node, Abs):
            u, ug = inner.run(node.arg)
            u = float(u[0])
            g = ug[0]
            scale = 1.0 + abs(u)
            if abs(u) <= tol * scale:
                active = (1, -1)
            else:
                active = (1,) if u > 0 else (-1,)
            infos.append(KinkInfo(node, "abs", 0.0, active, {1: g.copy(), -1: -g}))
            node_values.append(abs(u))
        else:
            vals, grads = [], []
            for a in node.args:
                v, ga = inner.run(a)
                vals.append(float(v[0]))
                grads.append(ga[0].copy())
            best = max(vals) if isinstance(node, Max) else min(vals)
            scale = 1.0 + max(abs(v) for v in vals)
            active = tuple(i for i, v in enumerate(vals) if abs(v - best) <= tol * scale)
            kind = "max" if isinstance(node, Max) else "min"
            infos.append(KinkInfo(node, kind, 0.0, active, dict(enumerate(grads))))
            node_values.append(best)
    index = {id(nd): j for j, nd in enumerate(nodes)}
    lookup = {nd: j for j, nd in enumerate(nodes)}

    def leaf(node, fwd):
        j = index.get(id(node))
        if j is None:
            j = lookup[node]
        g = np.zeros((1, n + m))
        g[0, n + j] = 1.0
        return np.array([node_values[j]]), g

    val, g = _Forward(X, n + m, leaf=leaf).run(e)
    grad_phi = g[0, :n].copy()
    for j, info in enumerate(infos):
        info.coef = float(g[0, n + j])
    return grad_phi, infos


def nonsmooth_at(e, x, d=None, tol=ACTIVE_TOL):
    """True when some kink of ``e`` is genuinely active at ``x`` (along ``d`` if given)."""
    _, infos = local_structure(e, x, tol)
    for info in infos:
        active = _restrict(info, d)
        if abs(info.coef) <= COEF_TOL or len(active) < 2:
            continue
        g0 = info.grads[active[0]]
        if any(np.max(np.abs(info.grads[s] - g0)) > 1e-12 for s in active[1:]):
            return True
    return False


def _restrict(info, d, tol=1e-12):
    if d is None or len(info.active) < 2:
        return info.active
    slopes = {s: float(info.grads[s] @ d) for s in info.active}
    best = max(slopes.values()) if info.picks_max() else min(slopes.values())
    scale = 1.0 + max(abs(v) for v in slopes.values())
    return tuple(s for s in info.active if abs(slopes[s] - best) <= tol * scale)


def dir_derivative(e, x, d):
    """One-sided directional derivative of ``e`` at ``x`` along ``d``."""
    d = np.asarray(d, dtype=float)
    grad_phi, infos = local_structure(e, x)
    total = float(grad_phi @ d)
    for info in infos:
        slopes = [float(info.grads[s] @ d) for s in info.active]
        total += info.coef * (max(slopes) if info.picks_max() else min(slopes))
    return total


def dir_derivative_batch(e, x, D):
    """Directional derivatives of ``e`` at ``x`` along every row of ``D``."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    grad_phi, infos = local_structure(e, x)
    total = D @ grad_phi
    for info in infos:
        S = np.stack([D @ info.grads[s] for s in info.active], axis=1)
        total = total + info.coef * (S.max(axis=1) if info.picks_max() else S.min(axis=1))
    return total


def linear_pieces(e, x):
    """The directional derivative of ``e`` at ``x`` as a piecewise linear map.

    Returns a list of ``(rows, grad)``: on the polyhedral cone
    ``{d : r.d >= 0 for r in rows}`` the derivative equals ``grad.d``.  The
    cones cover the whole space.
    """
    grad_phi, infos = local_structure(e, x)
    base = grad_phi.copy()
    kinked = []
    for info in infos:
        if abs(info.coef) <= COEF_TOL:
            continue
        if len(info.active) == 1:
            base = base + info.coef * info.grads[info.active[0]]
        else:
            kinked.append(info)
    pieces = []
    for sel in itertools.product(*(k.active for k in kinked)):
        rows = []
        g = base.copy()
        for info, s in zip(kinked, sel):
            g = g + info.coef * info.grads[s]
            for a in info.active:
                if a == s:
                    continue
                diff = info.grads[s] - info.grads[a]
                rows.append(diff if info.picks_max() else -diff)
        pieces.append((rows, g))
    return pieces


def _pattern_realizable(kinked, patterns):
    """First-order test that nearby points realize the given activity patterns."""
    rows, rhs, senses = [], [], []
    for info, S in zip(kinked, patterns):
        s0 = S[0]
        g0 = info.grads[s0]
        for s in S[1:]:
            rows.append(info.grads[s] - g0)
            rhs.append(0.0)
            senses.append("eq")
        for a in info.active:
            if a in S:
                continue
            diff = g0 - info.grads[a] if info.picks_max() else info.grads[a] - g0
            rows.append(diff)
            rhs.append(1.0)
            senses.append("ge")
    if not any(s == "ge" for s in senses):
        return True
    n = len(kinked[0].grads[kinked[0].active[0]])
    n_ge = sum(1 for s in senses if s == "ge")
    A = np.zeros((len(rows), 2 * n + n_ge))
    k = 0
    for r, (row, sense) in enumerate(zip(rows, senses)):
        A[r, :n] = row
        A[r, n:2 * n] = -row
        if sense == "ge":
            A[r, 2 * n + k] = -1.0
            k += 1
    res = solve_lp(A, np.array(rhs), exact=False)
    return res.feasible


def _subsets(active):
    out = []
    for r in range(len(active), 0, -1):
        out.extend(itertools.combinations(active, r))
    return out


def _subdiff(e, x, sign, d):
    x = np.asarray(x, dtype=float)
    n = len(x)
    grad_phi, infos = local_structure(e, x)
    base = sign * grad_phi
    kinked = []
    for info in infos:
        c = sign * info.coef
        if abs(c) <= COEF_TOL:
            continue
        active = _restrict(info, d)
        if len(active) == 1:
            base = base + c * info.grads[active[0]]
            continue
        kinked.append(KinkInfo(info.node, info.kind, c, active, info.grads))
    if not kinked:
        return PolyUnion.point(base)
    pieces = []
    for patterns in itertools.product(*(_subsets(k.active) for k in kinked)):
        if not _pattern_realizable(kinked, patterns):
            continue
        convex_parts = [np.array([base])]
        concave_choices = []
        for info, S in zip(kinked, patterns):
            pts = np.array([info.coef * info.grads[s] for s in S])
            convex = (info.coef > 0) == info.picks_max()
            if len(S) == 1 or convex:
                convex_parts.append(pts)
            else:
                concave_choices.append(pts)
        P = convex_parts[0]
        for Q in convex_parts[1:]:
            P = (P[:, None, :] + Q[None, :, :]).reshape(-1, n)
        if concave_choices:
            translates = []
            for combo in itertools.product(*concave_choices):
                shift = np.sum(combo, axis=0)
                translates.append(P + shift)
            P = intersect_polytopes(translates)
            if P is None:
                continue
        pieces.append(P)
    return PolyUnion(pieces, n).canonical()


def limiting_subdiff(e, x, sign=1):
    """Limiting subdifferential of ``sign * e`` at ``x``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return _subdiff(e, x, sign, None)


def dir_limiting_subdiff(e, x, d, sign=1):
    """Limiting subdifferential of ``sign * e`` at ``x`` in direction ``d``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = np.asarray(d, dtype=float)
    if not np.any(d):
        return _subdiff(e, x, sign, None)
    return _subdiff(e, x, sign, d)


# ---------------------------------------------------------------- vector functions

class VectorFunc:
    """A vector of expressions sharing the input dimension ``n``."""

    def __init__(self, components, n):
        self.components = tuple(as_expr(c) for c in components)
        self.n = int(n)
        for i, c in enumerate(self.components):
            if max_var_index(c) >= self.n:
                raise UnsupportedExpressionError(
                    f"component {i} uses a variable beyond dimension {self.n}")

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        return np.array([evaluate(c, x) for c in self.components])

    def eval_batch(self, X, check_domain=True):
        X = _as_batch(X)
        if not self.components:
            return np.zeros((len(X), 0))
        return np.stack([evaluate_batch(c, X, check_domain) for c in self.components], axis=1)

    def jacobian(self, x):
        """Rows are branch gradients (exact gradients where smooth)."""
        return np.array([gradient(c, x) for c in self.components]).reshape(len(self), self.n)

    def value_and_jacobian(self, x):
        vals, rows = [], []
        for c in self.components:
            v, g = value_and_grad(c, x)
            vals.append(v)
            rows.append(g)
        return np.array(vals), np.array(rows).reshape(len(self), self.n)

    def dir_derivative(self, x, d):
        return np.array([dir_derivative(c, x, d) for c in self.components])

    def dir_derivative_batch(self, x, D):
        D = np.atleast_2d(np.asarray(D, dtype=float))
        if not self.components:
            return np.zeros((len(D), 0))
        return np.stack([dir_derivative_batch(c, x, D) for c in self.components], axis=1)

    def linear_pieces(self, x):
        """Joint pieces ``(rows, M)`` with ``F'(x; d) = M d`` on ``{rows . d >= 0}``."""
        per = [linear_pieces(c, x) for c in self.components]
        out = []
        for combo in itertools.product(*per):
            rows = [r for rs, _ in combo for r in rs]
            M = np.array([g for _, g in combo]).reshape(len(self), self.n)
            out.append((rows, M))
        return out

    def is_piecewise_affine(self):
        return all(_degree(c) <= 1 for c in self.components)

    def nonsmooth_components(self, x, d=None):
        return [i for i, c in enumerate(self.components) if nonsmooth_at(c, x, d)]

    def scalarized(self, lam):
        terms = [float(li) * c for li, c in zip(lam, self.components) if li != 0]
        if not terms:
            return Const(0.0)
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out

    def to_json(self):
        return [c.to_json() for c in self.components]


def component_subdiffs(F, x, d=None):
    """``{(i, s): PolyUnion}`` of ``∂(s F_i)(x[;d])`` for ``s = ±1``."""
    out = {}
    for i, c in enumerate(F.components):
        for s in (1, -1):
            out[(i, s)] = (limiting_subdiff(c, x, s) if d is None
                           else dir_limiting_subdiff(c, x, d, s))
    return out


def scalarization_subdiff(F, lam, x, d=None):
    """``Σ|λ_i| ∂(sgn(λ_i) F_i)(x[;d])`` and whether it equals ``∂<λ,F>``.

    The flag is true when at most one component with ``λ_i ≠ 0`` has an
    active kink at ``x``; then the sum rule holds with equality.
    """
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    total = PolyUnion.point(np.zeros(F.n))
    kinked = 0
    for i, c in enumerate(F.components):
        li = float(lam[i])
        if li == 0.0:
            continue
        s = 1 if li > 0 else -1
        part = limiting_subdiff(c, x, s) if d is None else dir_limiting_subdiff(c, x, d, s)
        total = total.minkowski_sum(part.scale(abs(li)))
        if nonsmooth_at(c, x, None if d is None else np.asarray(d, dtype=float)):
            kinked += 1
    return total, kinked <= 1


def exact_scalarized_subdiff(F, lam, x, d=None):
    """``∂<λ,F>(x[;d])`` computed on the combined expression."""
    e = F.scalarized(lam)
    if d is None:
        return limiting_subdiff(e, x, 1)
    return dir_limiting_subdiff(e, x, d, 1)
