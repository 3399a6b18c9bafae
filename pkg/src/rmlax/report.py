"""Identity reports shared by every verification suite."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field


@dataclass
class IdentityResult:
    identity: str
    paper_tag: str
    max_residual: float
    samples: int
    tol: float
    expect: str = "pass"  # "fail" for negative controls
    extra: dict = field(default_factory=dict)
    min_residual: float | None = None
    suite: str = ""

    @property
    def passed(self) -> bool:
        """True when the outcome matches the expectation (every sample, for expected failures)."""
        if self.expect == "fail":
            low = self.max_residual if self.min_residual is None else self.min_residual
            return low > self.tol
        return self.max_residual < self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


@dataclass
class IdentityReport:
    suite: str
    entries: list[IdentityResult] = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    resampled: int = 0

    def add(self, identity, paper_tag, residuals, tol, expect="pass", **extra) -> IdentityResult:
        residuals = list(residuals)
        res = IdentityResult(
            identity=identity,
            paper_tag=paper_tag,
            max_residual=float(max(residuals)) if residuals else 0.0,
            min_residual=float(min(residuals)) if residuals else None,
            suite=self.suite,
            samples=len(residuals),
            tol=tol,
            expect=expect,
            extra=extra,
        )
        self.entries.append(res)
        return res

    def merge(self, other: "IdentityReport") -> "IdentityReport":
        self.entries.extend(other.entries)
        self.resampled += other.resampled
        return self

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[IdentityResult]:
        return [e for e in self.entries if not e.passed]

    def __getitem__(self, identity: str) -> IdentityResult:
        for e in self.entries:
            if e.identity == identity:
                return e
        raise KeyError(identity)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "environment": self.environment,
            "resampled": self.resampled,
            "entries": [e.to_dict() for e in sorted(self.entries, key=lambda e: (e.suite, e.identity))],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def summary_lines(self) -> list[str]:
        out = []
        for e in self.entries:
            flag = "PASS" if e.passed else "FAIL"
            low = f" min={e.min_residual:.3e}" if e.expect == "fail" and e.min_residual is not None else ""
            out.append(
                f"[{flag}] {e.suite or self.suite}:{e.identity} ({e.paper_tag}) "
                f"max={e.max_residual:.3e}{low} tol={e.tol:.1e} expect={e.expect} n={e.samples}"
            )
        return out


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def relative_residual(residual: float, *terms: float) -> float:
    """Residual divided by the largest term magnitude."""
    scale = max(terms, default=0.0)
    return residual / scale if scale > 0 else residual
