"""Closed-form security, reliability and rate quantities for BB84-INFO-z."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .attacks import binomial_tail

BISECT_TOL = 1e-10
_EDGE = 1e-12


class BoundsError(ValueError):
    pass


def h2(x: float) -> float:
    """Binary entropy in bits, with h2(0) = h2(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise BoundsError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log1p(-x) / math.log(2.0))


def secret_rate(p_az: float, p_ax: float, eps_sec: float = 0.0, eps_rel: float = 0.0,
                n: float = math.inf) -> float:
    """1 - H2(2 p_ax + 2 eps_sec) - H2(p_az + eps_rel + 1/n); the 1/n term vanishes for n = inf."""
    sec_arg = 2 * p_ax + 2 * eps_sec
    rel_arg = p_az + eps_rel + (0.0 if math.isinf(n) else 1.0 / n)
    if not 0.0 <= sec_arg <= 1.0:
        raise BoundsError(f"security term 2*p_ax + 2*eps_sec = {sec_arg} outside [0, 1]")
    if not 0.0 <= rel_arg <= 1.0:
        raise BoundsError(f"reliability term p_az + eps_rel + 1/n = {rel_arg} outside [0, 1]")
    return 1.0 - h2(sec_arg) - h2(rel_arg)


def rate_condition(p_az: float, p_ax: float, eps_sec: float = 0.0, eps_rel: float = 0.0,
                   n: float = math.inf) -> bool:
    """The threshold inequality H2(2 p_ax + 2 eps_sec) + H2(p_az + eps_rel + 1/n) < 1, evaluated directly."""
    tail = 0.0 if math.isinf(n) else 1.0 / n
    return h2(2 * p_ax + 2 * eps_sec) + h2(p_az + eps_rel + tail) < 1.0


@dataclass(frozen=True)
class BoundParams:
    n: int
    n_z: int
    n_x: int
    r: int
    m: int
    p_az: float
    p_ax: float
    eps_sec: float
    eps_rel: float

    def __post_init__(self):
        if min(self.n, self.n_z, self.n_x) < 1:
            raise BoundsError("n, n_z and n_x must be positive")
        if min(self.r, self.m) < 0:
            raise BoundsError("r and m must be non-negative")
        for name in ("p_az", "p_ax"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise BoundsError(f"{name} must lie in [0, 1]")
        for name in ("eps_sec", "eps_rel"):
            if getattr(self, name) < 0:
                raise BoundsError(f"{name} must be non-negative")

    @property
    def R(self) -> float:
        return self.m / self.n


def hoeffding_tail_bound(n: int, n_x: int, eps: float) -> float:
    """exp(-2 (n_x / (n + n_x))^2 n eps^2)."""
    if n < 1 or n_x < 1:
        raise BoundsError("n and n_x must be positive")
    return math.exp(-2.0 * (n_x / (n + n_x)) ** 2 * n * eps ** 2)


def security_exponent_bound(p: BoundParams) -> float:
    """2 R n exp(-(n_x / (n + n_x))^2 n eps_sec^2)."""
    return 2.0 * p.R * p.n * math.exp(-((p.n_x / (p.n + p.n_x)) ** 2) * p.n * p.eps_sec ** 2)


def reliability_exponent_bound(p: BoundParams) -> float:
    """exp(-2 (n_z / (n + n_z))^2 n eps_rel^2)."""
    return math.exp(-2.0 * (p.n_z / (p.n + p.n_z)) ** 2 * p.n * p.eps_rel ** 2)


def composability_bound(p: BoundParams) -> float:
    return reliability_exponent_bound(p) + security_exponent_bound(p)


@dataclass(frozen=True)
class BoundReport:
    security_bound: float
    reliability_bound: float
    composability_bound: float
    secret_rate: float | None
    threshold_ok: bool


def evaluate(p: BoundParams) -> BoundReport:
    sec = security_exponent_bound(p)
    rel = reliability_exponent_bound(p)
    try:
        rate = secret_rate(p.p_az, p.p_ax, p.eps_sec, p.eps_rel, p.n)
    except BoundsError:
        rate = None
    return BoundReport(sec, rel, rel + sec, rate, rate is not None and rate > 0)


def report_row(p: BoundParams) -> dict:
    row = asdict(p)
    row["R"] = p.R
    row.update(asdict(evaluate(p)))
    return row


def theorem1_rhs(m: int, n: int, q_x: float, d_rm: int) -> float:
    """2 m sqrt(P[Bin(n, q_x) >= d_rm / 2]): the bound on Eve's distance between two keys.

    The test-passing conjuncts of the joint event are dropped, which can only
    enlarge the probability.
    """
    if d_rm < 0:
        raise BoundsError("d_rm must be non-negative")
    return 2.0 * m * math.sqrt(binomial_tail(n, q_x, d_rm / 2.0))


def _bisect_increasing(f, target: float, lo: float, hi: float, tol: float = BISECT_TOL) -> float:
    flo = f(lo) - target
    if flo >= 0:
        return lo
    if f(hi) - target <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_point(p_ax: float) -> float:
    """The p_az in [0, 1/2) with H2(2 p_ax) + H2(p_az) = 1."""
    if not 0.0 <= p_ax < 0.25:
        raise BoundsError(f"p_ax = {p_ax}: no threshold for p_ax outside [0, 0.25)")
    return _bisect_increasing(h2, 1.0 - h2(2.0 * p_ax), _EDGE, 0.5 - _EDGE)


def threshold_curve(grid) -> list[tuple[float, float | None]]:
    """(p_ax, p_az) on the zero-rate boundary, with None where no solution exists."""
    out = []
    for p_ax in grid:
        try:
            out.append((float(p_ax), threshold_point(float(p_ax))))
        except BoundsError:
            out.append((float(p_ax), None))
    return out


def symmetric_threshold() -> float:
    """The p solving H2(2p) + H2(p) = 1."""
    return _bisect_increasing(lambda p: h2(2 * p) + h2(p), 1.0, _EDGE, 0.25 - _EDGE)


def grid(start: float, end: float, step: float) -> list[float]:
    """Inclusive grid; points are start + i*step rounded to 12 decimals."""
    if step <= 0:
        raise BoundsError("grid step must be positive")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(count, 0))]


def hoeffding_empirical(population, sample_size: int, eps_grid, trials: int,
                        rng: np.random.Generator, chunk: int = 10_000) -> list[dict]:
    """Monte-Carlo tail of (sample mean - population mean) for sampling without replacement.

    For each eps, the estimate is the fraction of draws whose deviation exceeds
    ``(n_x / (n + n_x)) * eps`` with ``n = sample_size`` and ``n_x`` the rest of
    the population; each comes with its binomial standard error.
    """
    pop = np.asarray(population, dtype=np.float64)
    total = pop.size
    if not 1 <= sample_size <= total:
        raise BoundsError("sample size must be between 1 and the population size")
    if trials < 1:
        raise BoundsError("trials must be at least 1")
    mu = pop.mean()
    n_x = total - sample_size
    scale = n_x / total
    deviations = np.empty(trials)
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        keys = rng.random((k, total))
        idx = np.argpartition(keys, sample_size - 1, axis=1)[:, :sample_size] if sample_size < total \
            else np.broadcast_to(np.arange(total), (k, total))
        deviations[done:done + k] = pop[idx].mean(axis=1) - mu
        done += k
    rows = []
    for eps in eps_grid:
        t = scale * eps
        # slack keeps exact ties (k/n - w/N == t) on the "not greater" side
        frac = float(np.mean(deviations > t + 1e-12))
        rows.append({
            "eps": float(eps),
            "threshold": t,
            "empirical": frac,
            "stderr": math.sqrt(frac * (1 - frac) / trials),
            "bound": hoeffding_tail_bound(sample_size, n_x, eps) if n_x else 1.0,
        })
    return rows
