"""Run reports: JSON documents with exact rationals kept as strings."""

from __future__ import annotations

import csv
import io
import json
import platform
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import __version__
from .core import DyadicProbability, ModelError


def exact_str(x: Fraction | int | DyadicProbability) -> str:
    """``num/2^e`` when the denominator is a power of two, else ``num/den``."""
    if isinstance(x, DyadicProbability):
        return str(x)
    x = Fraction(x)
    d = x.denominator
    if d & (d - 1) == 0:
        return f"{x.numerator}/2^{d.bit_length() - 1}"
    return f"{x.numerator}/{d}"


def parse_exact(text: str) -> Fraction:
    num, sep, rest = text.partition("/")
    try:
        if not sep:
            return Fraction(int(num))
        if rest.startswith("2^"):
            return Fraction(int(num), 1 << int(rest[2:]))
        return Fraction(int(num), int(rest))
    except ValueError as exc:
        raise ModelError(f"not an exact rational: {text!r}") from exc


def exact_entry(x) -> dict[str, Any]:
    """Exact string plus a decimal rendering for humans."""
    if x is None:
        return {"exact": None, "decimal": None}
    value = x.fraction if isinstance(x, DyadicProbability) else Fraction(x)
    return {"exact": exact_str(x), "decimal": float(value)}


@dataclass
class RunReport:
    command: str
    parameters: dict[str, Any]
    results: dict[str, Any] = field(default_factory=dict)
    passed: bool = True
    failures: list[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    seed: int | None = None

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": "sspi",
            "version": __version__,
            "python": platform.python_version(),
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "passed": self.passed,
            "failures": self.failures,
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "results": self.results,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def element_csv(rows: list[dict[str, Any]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
