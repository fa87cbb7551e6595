from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .complex import format_rational, parse_rational


@dataclass
class Decision:
    """Outcome of a thresholded overlap decision.

    ``norm_sq`` is exact for the exact method; ``norm`` is always a float.
    For the QPE method ``norm`` is the square root of the in-window sample
    fraction.
    """

    outcome: int
    norm: float
    method: str
    norm_sq: Fraction | float | None = None
    gap: float | None = None
    promise_violated: bool = False
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        if isinstance(self.norm_sq, Fraction):
            r = _exact_sqrt(self.norm_sq)
            norm = format_rational(r) if r is not None else self.norm
            norm_sq = format_rational(self.norm_sq)
        else:
            norm, norm_sq = self.norm, self.norm_sq
        out = {
            "outcome": self.outcome,
            "norm": norm,
            "method": self.method,
            "gap": self.gap,
            "promise_violated": self.promise_violated,
        }
        if norm_sq is not None:
            out["norm_sq"] = norm_sq
        reasons = self.diagnostics.get("promise_reasons")
        if reasons:
            out["promise_reasons"] = list(reasons)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: dict) -> Decision:
        for key in ("outcome", "norm", "method", "promise_violated"):
            if key not in data:
                raise ValueError(f"decision.{key}: missing field")
        if data["outcome"] not in (0, 1):
            raise ValueError("decision.outcome: expected 0 or 1")
        if data["method"] not in ("exact", "float", "qpe"):
            raise ValueError("decision.method: expected 'exact', 'float' or 'qpe'")
        norm = data["norm"]
        norm_sq = data.get("norm_sq")
        if isinstance(norm_sq, str):
            norm_sq = parse_rational(norm_sq)
        if isinstance(norm, str):
            norm = float(parse_rational(norm))
        return cls(
            outcome=data["outcome"],
            norm=float(norm),
            method=data["method"],
            norm_sq=norm_sq,
            gap=data.get("gap"),
            promise_violated=bool(data["promise_violated"]),
            diagnostics={"promise_reasons": data.get("promise_reasons", [])},
        )


def _exact_sqrt(x: Fraction):
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None
