"""Experiment drivers behind the CLI: protocol sweeps, distance verification, Hoeffding checks."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import attacks, bounds, gf2
from .attacks import CollectiveAttackSpec
from .quantum import trace_distance_factored
from .rng import stream

MARGIN_TOL = 1e-9

TRIAL_COLUMNS = ["trial", "aborted", "weight_cz", "weight_cb", "weight_cs", "keys_equal"]
VERIFY_COLUMNS = ["attack", "probe_dim", "n", "r", "m", "d_rm", "q_x", "xi", "k", "k_prime",
                  "distance", "bound", "margin", "status"]
HOEFFDING_COLUMNS = ["n", "n_x", "weight", "eps", "threshold", "empirical", "stderr", "bound", "ok"]
CURVE_COLUMNS = ["p_ax", "p_az"]
BOUND_COLUMNS = ["n", "n_z", "n_x", "r", "m", "p_az", "p_ax", "eps_sec", "eps_rel", "R",
                 "security_bound", "reliability_bound", "composability_bound", "secret_rate", "threshold_ok"]


def trial_row(index: int, tr) -> dict:
    return {
        "trial": index,
        "aborted": int(tr.aborted),
        "weight_cz": gf2.weight(tr.c_z),
        "weight_cb": gf2.weight(tr.c_b),
        "weight_cs": gf2.weight(tr.c_s),
        "keys_equal": "" if tr.keys_equal is None else int(tr.keys_equal),
    }


def _rate(successes: int, total: int) -> tuple[float, float]:
    if total == 0:
        return float("nan"), float("nan")
    p = successes / total
    return p, math.sqrt(p * (1 - p) / total)


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
    return float(v.mean()), float(se)


def summarize(transcripts) -> dict:
    trials = len(transcripts)
    aborts = sum(t.aborted for t in transcripts)
    passing = [t for t in transcripts if not t.aborted]
    out = {"trials": trials}
    out["abort_rate"], out["abort_rate_se"] = _rate(aborts, trials)
    for cls in ("c_s", "c_z", "c_b"):
        rates = [gf2.weight(getattr(t, cls)) / max(getattr(t, cls).size, 1) for t in transcripts]
        out[f"error_rate_{cls}"], out[f"error_rate_{cls}_se"] = _mean_se(rates)
    out["passing"] = len(passing)
    out["agreement_rate"], out["agreement_rate_se"] = _rate(sum(t.keys_equal for t in passing), len(passing))
    out["fail_and_pass_rate"], out["fail_and_pass_rate_se"] = _rate(
        sum(not t.keys_equal for t in passing), trials)
    return out


# --- key-state distance verification ---------------------------------------

@dataclass(frozen=True, eq=False)
class Instance:
    attack: CollectiveAttackSpec
    code: gf2.LinearCodeSpec


def default_codes(seed: int, n_values=range(2, 9), max_rm: int = 4, per_shape: int = 1) -> list:
    """Random full-rank codes for every (n, r, m) with m >= 1 and r + m <= min(n, max_rm)."""
    rng = stream(seed, 0x5EED)
    codes = []
    for n in n_values:
        for total in range(1, min(n, max_rm) + 1):
            for r in range(0, total):
                for _ in range(per_shape):
                    codes.append(gf2.random_code(n, r, total - r, rng))
    return codes


def default_instances(seed: int = 0) -> list:
    """Built-in attacks crossed with the default codes, plus two four-dimensional probes on short codes."""
    codes = default_codes(seed)
    out = [Instance(a, c) for a in attacks.builtin_suite() for c in codes]
    from .protocol import channel_noise_wrapper
    extra = [channel_noise_wrapper(0.05, 0.1), attacks.random_attack(4, stream(seed, 0xA77))]
    out += [Instance(a, c) for a in extra for c in codes if c.n <= 4]
    return out


def verify_instance(inst: Instance) -> list[dict]:
    """One row per syndrome and unordered key pair, or a single skipped row."""
    attack, code = inst.attack, inst.code
    base = {"attack": attack.name, "probe_dim": attack.probe_dim, "n": code.n, "r": code.r, "m": code.m}
    try:
        d_rm = code.drm()
        q_x = attacks.error_rate(attack, "x")
        bound = bounds.theorem1_rhs(code.m, code.n, q_x, d_rm)
        families = [(xi, attacks.rho_hat_factors(attack, code, gf2.int_to_bits(xi, code.r)))
                    for xi in range(1 << code.r)]
    except gf2.CapExceeded as exc:
        return [dict(base, d_rm="", q_x="", xi="", k="", k_prime="", distance="", bound="", margin="",
                     status=f"skipped: {exc}")]
    rows = []
    for xi, fam in families:
        for k, kp in itertools.combinations(sorted(fam), 2):
            dist = trace_distance_factored(*fam[k], *fam[kp])
            margin = bound - dist
            rows.append(dict(base, d_rm=d_rm, q_x=q_x, xi=gf2.bits_to_str(gf2.int_to_bits(xi, code.r)),
                             k=k, k_prime=kp, distance=dist, bound=bound, margin=margin,
                             status="ok" if margin >= -MARGIN_TOL else "violation"))
    return rows


def verify_distance(instances, workers: int = 1) -> list[dict]:
    """Rows for every instance, in instance order."""
    if workers <= 1:
        return [row for inst in instances for row in verify_instance(inst)]
    with ProcessPoolExecutor(workers) as pool:
        return [row for rows in pool.map(verify_instance, instances, chunksize=4) for row in rows]


# --- Hoeffding -------------------------------------------------------------

def hoeffding_rows(n: int, n_x: int, weights, eps_grid, trials: int, seed: int) -> list[dict]:
    rows = []
    for idx, w in enumerate(weights):
        if not 0 <= w <= n + n_x:
            raise bounds.BoundsError(f"population weight {w} outside [0, {n + n_x}]")
        pop = np.zeros(n + n_x, dtype=np.uint8)
        pop[:w] = 1
        for r in bounds.hoeffding_empirical(pop, n, eps_grid, trials, stream(seed, idx)):
            r.update(n=n, n_x=n_x, weight=w)
            r["ok"] = int(r["empirical"] <= r["bound"] + 3 * r["stderr"])
            rows.append(r)
    return rows
