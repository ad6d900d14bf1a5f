"""Problem records and their JSON schema."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (InfeasiblePointError, NotOrthodisjunctiveError, SchemaError,
                     UnsupportedExpressionError)
from .orthogeom import FEAS_TOL, OrthoSet
from .pwexpr import Expr, VectorFunc, from_json, max_var_index, value_and_grad


class SecondOrderCone:
    """``{y : |y[:-1]| <= y[-1]}``; only the sampling tools accept it."""

    def __init__(self, dim):
        if dim < 2:
            raise SchemaError("second-order cone needs dimension >= 2")
        self.dim = int(dim)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        u, t = y[:-1], y[-1]
        nu = np.linalg.norm(u)
        if nu <= t:
            return y.copy(), 0
        if nu <= -t:
            return np.zeros_like(y), 0
        a = 0.5 * (nu + t)
        return np.concatenate([a * u / nu, [a]]), 0

    def distance(self, y):
        return float(np.linalg.norm(np.asarray(y, dtype=float) - self.project(y)[0]))

    def distance_batch(self, Y):
        return np.array([self.distance(y) for y in np.atleast_2d(Y)])

    def contains(self, y, tol=FEAS_TOL):
        return self.distance(y) <= tol

    def to_json(self):
        return {"soc": self.dim}


@dataclass
class ProblemSpec:
    """``min f(x)`` subject to ``F(x)`` in ``gamma``."""

    n: int
    f: Expr
    F: VectorFunc
    gamma: object
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.f.is_smooth:
            raise UnsupportedExpressionError("objective must be smooth")
        if max_var_index(self.f) >= self.n:
            raise UnsupportedExpressionError("objective uses a variable beyond n")
        if len(self.F) != self.gamma.dim:
            raise SchemaError(f"F has {len(self.F)} components but Gamma has dimension {self.gamma.dim}")

    @property
    def ell(self):
        return len(self.F)

    @property
    def orthodisjunctive(self):
        return isinstance(self.gamma, OrthoSet)

    def require_orthodisjunctive(self):
        if not self.orthodisjunctive:
            raise NotOrthodisjunctiveError(
                f"problem {self.name or '?'} has a non-box constraint set; only the sampling tools apply")

    def point(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise SchemaError(f"point has dimension {x.size}, expected {self.n}")
        return x

    def grad_f(self, x):
        return value_and_grad(self.f, self.point(x))[1]

    def violation(self, x):
        return self.gamma.distance(self.F.eval(self.point(x)))

    def is_feasible(self, x, tol=FEAS_TOL):
        return self.violation(x) <= tol

    def require_feasible(self, x, tol=FEAS_TOL):
        x = self.point(x)
        v = self.violation(x)
        if v > tol:
            raise InfeasiblePointError(f"x = {x.tolist()} is infeasible: dist(F(x), Gamma) = {v:.3g}")
        return x

    def default_point(self):
        if "xbar" not in self.meta:
            raise SchemaError("no point given and the problem file has no 'xbar'")
        return self.point(self.meta["xbar"])

    def to_json(self):
        out = {"n": self.n, "f": self.f.to_json(), "F": self.F.to_json(),
               "Gamma": self.gamma.to_json()}
        if self.name:
            out["name"] = self.name
        out.update({k: v for k, v in self.meta.items()})
        return out


def problem_from_dict(obj, source="<dict>"):
    if not isinstance(obj, dict):
        raise SchemaError(f"{source}: top level must be an object")
    for key in ("n", "f", "F", "Gamma"):
        if key not in obj:
            raise SchemaError(f"{source}: missing field '{key}'")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError(f"{source}: field 'n' must be a positive integer")
    try:
        f = from_json(obj["f"], "$.f")
    except UnsupportedExpressionError as exc:
        raise UnsupportedExpressionError(f"{source}: {exc}") from None
    if not isinstance(obj["F"], list) or not obj["F"]:
        raise SchemaError(f"{source}: field 'F' must be a nonempty list of expressions")
    comps = []
    for i, c in enumerate(obj["F"]):
        try:
            comps.append(from_json(c, f"$.F[{i}]"))
        except UnsupportedExpressionError as exc:
            raise UnsupportedExpressionError(f"{source}: {exc}") from None
    G = obj["Gamma"]
    if isinstance(G, dict) and "soc" in G:
        gamma = SecondOrderCone(int(G["soc"]))
    else:
        try:
            gamma = OrthoSet.from_json(G)
        except SchemaError as exc:
            raise SchemaError(f"{source}: Gamma: {exc}") from None
    try:
        F = VectorFunc(comps, n)
    except UnsupportedExpressionError as exc:
        raise UnsupportedExpressionError(f"{source}: {exc}") from None
    meta = {k: v for k, v in obj.items() if k not in ("n", "f", "F", "Gamma", "name")}
    if "xbar" in meta:
        xb = meta["xbar"]
        if not isinstance(xb, list) or len(xb) != n:
            raise SchemaError(f"{source}: field 'xbar' must be a list of {n} numbers")
    return ProblemSpec(n, f, F, gamma, name=str(obj.get("name", "")), meta=meta)


def load_problem(path):
    """Read and validate a problem file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    spec = problem_from_dict(obj, str(path))
    if not spec.name:
        spec.name = path.stem
    return spec


def parse_vector(text, dim=None, what="vector"):
    """Parse ``"1,-2.5,0"``; also accepts ``sqrt`` free fractions like ``1/2``."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    vals = []
    for p in parts:
        try:
            if "/" in p:
                a, b = p.split("/", 1)
                vals.append(float(a) / float(b))
            else:
                vals.append(float(p))
        except ValueError:
            raise SchemaError(f"cannot parse {what} entry {p!r}") from None
    if dim is not None and len(vals) != dim:
        raise SchemaError(f"{what} has {len(vals)} entries, expected {dim}")
    if any(math.isnan(v) for v in vals):
        raise SchemaError(f"{what} contains NaN")
    return np.array(vals)
