"""Multi-run aggregation and the paired t-test.

The Student-t tail comes from the regularized incomplete beta function,
evaluated with a Lentz continued fraction; no numerical dependencies.
"""
from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass

from .errors import StatsError

BETACF_TOL = 1e-12
BETACF_MAX_ITER = 10_000
_TINY = 1e-300


@dataclass(frozen=True)
class RunSeries:
    condition_name: str
    observations: tuple  # ((seed, f1), ...)

    def __post_init__(self):
        seeds = [s for s, _ in self.observations]
        if len(set(seeds)) != len(seeds):
            raise StatsError(f"{self.condition_name}: duplicate seeds")
        for seed, f1 in self.observations:
            if not 0.0 <= f1 <= 1.0:
                raise StatsError(f"{self.condition_name}: f1 {f1} for seed {seed} outside [0, 1]")

    @classmethod
    def from_pairs(cls, name, pairs):
        return cls(name, tuple((int(s), float(v)) for s, v in pairs))

    @property
    def seeds(self):
        return [s for s, _ in self.observations]

    @property
    def values(self):
        return [v for _, v in self.observations]


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    mean_difference: float
    degenerate: bool = False  # zero variance of differences with nonzero mean

    def significant(self, threshold=0.001) -> bool:
        return self.p_value < threshold

    def as_dict(self, threshold=0.001):
        return {
            "t": self.t_statistic if math.isfinite(self.t_statistic) else str(self.t_statistic),
            "df": self.degrees_of_freedom,
            "p": self.p_value,
            "mean_diff": self.mean_difference,
            "significant": self.significant(threshold),
            "degenerate": self.degenerate,
            "threshold": threshold,
        }


def summarize(series: RunSeries) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation of the series' F1 values."""
    values = series.values
    if not values:
        raise StatsError(f"{series.condition_name}: empty series")
    mean = math.fsum(values) / len(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: int) -> float:
    if math.isnan(t):
        raise ValueError("t is NaN")
    if math.isinf(t):
        return 0.0
    p = betainc(df / 2.0, 0.5, df / (df + t * t))
    return min(1.0, max(0.0, p))


def paired_t_test(a: RunSeries, b: RunSeries) -> TTestResult:
    """Two-sided paired t-test on per-seed differences ``a - b``.

    Both series must list the same seeds in the same order.
    """
    if a.seeds != b.seeds:
        raise StatsError(f"series {a.condition_name!r} and {b.condition_name!r} are not paired by seed "
                         "(same seeds, same order required)")
    n = len(a.observations)
    if n < 2:
        raise StatsError("paired t-test needs at least 2 paired observations")
    d = [x - y for x, y in zip(a.values, b.values)]
    mean_d = math.fsum(d) / n
    sd_d = statistics.stdev(d)
    df = n - 1
    if sd_d == 0.0:
        if mean_d == 0.0:
            return TTestResult(0.0, df, 1.0, 0.0)
        return TTestResult(math.copysign(math.inf, mean_d), df, 0.0, mean_d, degenerate=True)
    t = mean_d / (sd_d / math.sqrt(n))
    return TTestResult(t, df, t_two_sided_p(t, df), mean_d)


def read_run_series(path, condition=None) -> list[RunSeries]:
    """Read a JSON-lines file of ``{"condition", "seed", "f1"}`` records.

    Returns one series per condition in first-appearance order, or only
    ``condition`` when given.
    """
    groups: dict[str, list] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                groups.setdefault(str(rec["condition"]), []).append((rec["seed"], rec["f1"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise StatsError(f"{path}:{lineno}: bad run record ({e})") from None
    series = [RunSeries.from_pairs(name, pairs) for name, pairs in groups.items()]
    if condition is not None:
        series = [s for s in series if s.condition_name == condition]
        if not series:
            raise StatsError(f"{path}: no runs for condition {condition!r}")
    return series


def write_run_series(series: RunSeries, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for seed, f1 in series.observations:
            f.write(json.dumps({"condition": series.condition_name, "seed": seed, "f1": f1}) + "\n")
