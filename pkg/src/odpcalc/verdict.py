"""Three-valued outcomes shared by all checkers."""

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class Status(enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self):
        return {Status.HOLDS: 0, Status.FAILS: 1, Status.INCONCLUSIVE: 2}[self]


@dataclass(frozen=True)
class Certificate:
    """Multiplier together with the subgradient combination that certifies it.

    ``witnesses[i]`` is ``(vertices, weights)`` for component ``i``; the
    weights sum to ``|lam[i]|`` and the weighted vertices add up to the
    target vector.
    """

    lam: np.ndarray
    cell: tuple
    witnesses: tuple
    residual: float
    branch: tuple = ()

    def combination(self):
        total = None
        for verts, weights in self.witnesses:
            if len(weights) == 0:
                continue
            part = np.asarray(weights) @ np.asarray(verts)
            total = part if total is None else total + part
        if total is None:
            return None
        return total

    def to_dict(self):
        from .orthogeom import cell_str
        return {
            "lambda": [float(v) for v in self.lam],
            "cell": cell_str(self.cell),
            "branch": list(self.branch),
            "residual": float(self.residual),
        }


@dataclass(frozen=True)
class Verdict:
    status: Status
    certificate: Certificate | None = None
    witness: Any = None
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.status is Status.HOLDS

    @property
    def fails(self):
        return self.status is Status.FAILS

    @property
    def inconclusive(self):
        return self.status is Status.INCONCLUSIVE

    def to_dict(self):
        out = {"status": self.status.value}
        if self.certificate is not None:
            out.update(self.certificate.to_dict())
        if self.witness is not None:
            out["witness"] = to_jsonable(self.witness)
        if self.reason:
            out["reason"] = self.reason
        if self.details:
            out["details"] = to_jsonable(self.details)
        return out


def holds(**kw):
    return Verdict(Status.HOLDS, **kw)


def fails(**kw):
    return Verdict(Status.FAILS, **kw)


def inconclusive(reason, **kw):
    return Verdict(Status.INCONCLUSIVE, reason=reason, **kw)


def to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v:
            return "nan"
        if v in (float("inf"), float("-inf")):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj
