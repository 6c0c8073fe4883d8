"""Collective attacks: one unitary on (probe, qubit), applied to every qubit.

An attack is stored as its unitary ``u`` on C^{d_E} (x) C^2 together with the
initial probe state.  Everything Eve can learn about a single bit, and every
error it causes, follows from ``u @ (probe (x) |bit^basis>)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import gf2
from .quantum import PAULI_X, DensityMatrix, QuantumError, basis_ket, is_unitary

#: rho_hat_k is refused when d_E ** n exceeds this.
MAX_EVE_DIM = 4096
BASES = ("z", "x")


class AttackError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CollectiveAttackSpec:
    probe_dim: int
    unitary: np.ndarray
    name: str = "custom"
    initial_probe: np.ndarray = field(default=None)

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        if self.probe_dim < 1 or u.shape != (2 * self.probe_dim, 2 * self.probe_dim):
            raise AttackError(f"unitary must be {2 * self.probe_dim}x{2 * self.probe_dim} for probe_dim {self.probe_dim}")
        if not is_unitary(u):
            raise AttackError(f"attack {self.name!r}: operator is not unitary")
        probe = self.initial_probe
        if probe is None:
            probe = np.zeros(self.probe_dim, dtype=complex)
            probe[0] = 1.0
        probe = np.array(probe, dtype=complex)
        if probe.shape != (self.probe_dim,) or abs(np.linalg.norm(probe) - 1) > 1e-10:
            raise AttackError("initial probe must be a unit vector of length probe_dim")
        u.flags.writeable = False
        probe.flags.writeable = False
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "initial_probe", probe)

    def output_state(self, bit: int, basis: str) -> np.ndarray:
        """Joint (probe, qubit) state after the attack on |bit^basis>."""
        return self.unitary @ np.kron(self.initial_probe, basis_ket(bit, basis))

    def probe_components(self, basis: str) -> dict:
        """The non-normalized probe vectors E_{ij}: u|0>|i> = sum_j E_ij |j>, both in ``basis``."""
        out = {}
        for i in (0, 1):
            joint = self.output_state(i, basis).reshape(self.probe_dim, 2)
            for j in (0, 1):
                out[(i, j)] = joint @ basis_ket(j, basis).conj()
        return out


def error_rate(attack: CollectiveAttackSpec, basis: str) -> float:
    """Probability that Bob, measuring in ``basis``, disagrees with a uniformly random sent bit."""
    comps = attack.probe_components(basis)
    return float(0.5 * _flip_probs(comps).sum())


def _flip_probs(comps) -> np.ndarray:
    p = np.array([np.vdot(comps[(b, 1 - b)], comps[(b, 1 - b)]).real for b in (0, 1)])
    # squash float residue from the 1/sqrt(2) amplitudes
    p[p < 1e-15] = 0.0
    return np.clip(p, 0.0, 1.0)


def outcome_probabilities(attack: CollectiveAttackSpec, basis: str) -> np.ndarray:
    """``p[b]`` = probability Bob's outcome differs from sent bit ``b`` (both in ``basis``)."""
    return _flip_probs(attack.probe_components(basis))


def eve_probe_state(attack: CollectiveAttackSpec, bit: int, basis: str) -> DensityMatrix:
    """Eve's probe after the attack, with the transmitted qubit traced out."""
    joint = attack.output_state(bit, basis).reshape(attack.probe_dim, 2)
    rho = joint @ joint.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def consistent_strings(code: gf2.LinearCodeSpec, xi, k) -> np.ndarray:
    """All x in F_2^n with ``x pc^T = xi`` and ``x pk^T = k`` (rows of the result)."""
    n = code.n
    xs = _all_strings(n)
    target = np.concatenate([gf2.as_bits(xi), gf2.as_bits(k)])
    if target.size != code.r + code.m:
        raise AttackError(f"need {code.r} syndrome bits and {code.m} key bits")
    mask = (gf2.syndrome(xs, code.stacked()) == target).all(axis=1)
    return xs[mask]


def _all_strings(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _check_cap(attack: CollectiveAttackSpec, n: int):
    if attack.probe_dim ** n > MAX_EVE_DIM:
        raise gf2.CapExceeded(
            f"instance too large for exhaustive mode: d_E^n = {attack.probe_dim}^{n} > {MAX_EVE_DIM}")


def rho_hat_k(attack: CollectiveAttackSpec, code: gf2.LinearCodeSpec, xi, k, bases=None) -> DensityMatrix:
    """Eve's state given syndrome ``xi`` and final key ``k``.

    Uniform mixture, over the INFO strings x consistent with (xi, k), of the
    product of per-bit probe states.  INFO bits are always sent in the z basis;
    any other ``bases`` string is rejected.
    """
    n = code.n
    if bases is not None and np.any(np.asarray(bases)):
        raise AttackError("INFO bits are encoded in the z basis only")
    _check_cap(attack, n)
    return _rho_hat_from_strings(_probe_pair(attack), consistent_strings(code, xi, k))


def _probe_pair(attack):
    return tuple(eve_probe_state(attack, b, "z").matrix for b in (0, 1))


def _rho_hat_from_strings(pair, xs) -> DensityMatrix:
    if len(xs) == 0:
        raise AttackError("no string is consistent with this syndrome and key")
    total = None
    for x in xs:
        term = reduce(np.kron, (pair[b] for b in x))
        total = term if total is None else total + term
    return DensityMatrix(total / len(xs))


def rho_hat_family(attack: CollectiveAttackSpec, code: gf2.LinearCodeSpec, xi) -> dict:
    """``{key string: rho_hat_k}`` for every m-bit key, for one syndrome."""
    _check_cap(attack, code.n)
    pair = _probe_pair(attack)
    xs = _all_strings(code.n)
    xs = xs[(gf2.syndrome(xs, code.pc) == gf2.as_bits(xi)).all(axis=1)] if code.r else xs
    keys = gf2.apply_key_map(xs, code.pk)
    out = {}
    for kv in range(1 << code.m):
        k = gf2.int_to_bits(kv, code.m)
        out[gf2.bits_to_str(k)] = _rho_hat_from_strings(pair, xs[(keys == k).all(axis=1)])
    return out


def _probe_factors(attack) -> tuple:
    """Per bit value b, the nonzero vectors E_bt with eve_probe_state(b, z) = sum_t E_bt E_bt^dag."""
    comps = attack.probe_components("z")
    return tuple([comps[(b, t)] for t in (0, 1) if np.linalg.norm(comps[(b, t)]) > 1e-15] for b in (0, 1))


def _factor_columns(factors, xs) -> np.ndarray:
    cols = []
    for x in xs:
        block = np.ones((1, 1), dtype=complex)
        for b in x:
            site = np.array(factors[b])
            block = np.einsum("ka,tb->ktab", block, site).reshape(block.shape[0] * site.shape[0], -1)
        cols.append(block)
    return np.vstack(cols).T


def rho_hat_factors(attack: CollectiveAttackSpec, code: gf2.LinearCodeSpec, xi) -> dict:
    """``{key string: (Y, w)}`` with rho_hat_k = w * Y Y^dag, for one syndrome.

    Same states as :func:`rho_hat_family`, kept in factored form so that
    distances can be computed on the (often much smaller) joint support.
    """
    _check_cap(attack, code.n)
    factors = _probe_factors(attack)
    xs = _all_strings(code.n)
    if code.r:
        xs = xs[(gf2.syndrome(xs, code.pc) == gf2.as_bits(xi)).all(axis=1)]
    keys = gf2.apply_key_map(xs, code.pk)
    out = {}
    for kv in range(1 << code.m):
        k = gf2.int_to_bits(kv, code.m)
        members = xs[(keys == k).all(axis=1)]
        if len(members) == 0:
            raise AttackError("no string is consistent with this syndrome and key")
        out[gf2.bits_to_str(k)] = (_factor_columns(factors, members), 1.0 / len(members))
    return out


def binomial_tail(n: int, q: float, t: float) -> float:
    """Exact ``P[Bin(n, q) >= t]``, summed over whichever tail is shorter."""
    if not 0.0 <= q <= 1.0:
        raise AttackError(f"probability {q} outside [0, 1]")
    if n < 0:
        raise AttackError("n must be non-negative")
    k0 = max(0, math.ceil(t))
    if k0 > n:
        return 0.0
    if k0 == 0:
        return 1.0
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    lq, lp = math.log(q), math.log1p(-q)
    lfn = math.lgamma(n + 1)

    def term(k):
        return math.exp(lfn - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * lq + (n - k) * lp)

    if k0 > n * q:
        return min(1.0, math.fsum(term(k) for k in range(k0, n + 1)))
    return max(0.0, 1.0 - math.fsum(term(k) for k in range(0, k0)))


# --- built-in attacks -------------------------------------------------------

def identity_attack() -> CollectiveAttackSpec:
    return CollectiveAttackSpec(1, np.eye(2), name="identity")


def bitflip_attack() -> CollectiveAttackSpec:
    return CollectiveAttackSpec(1, PAULI_X, name="bitflip")


def _controlled_probe_op(probe_op: np.ndarray, basis: str) -> np.ndarray:
    """Apply ``probe_op`` to the probe iff the qubit holds 1 in ``basis``."""
    d = probe_op.shape[0]
    p1 = np.outer(basis_ket(1, basis), basis_ket(1, basis).conj())
    p0 = np.eye(2) - p1
    return np.kron(np.eye(d), p0) + np.kron(probe_op, p1)


def cnot_attack(basis: str = "z") -> CollectiveAttackSpec:
    """Probe copies the qubit's value in ``basis``."""
    return CollectiveAttackSpec(2, _controlled_probe_op(PAULI_X, basis), name=f"cnot-{basis}")


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def partial_copy_attack(theta: float, basis: str = "z") -> CollectiveAttackSpec:
    """Qubit value in ``basis`` controls a rotation R_y(theta) of the probe.

    theta = 0 is the identity attack; theta = pi acts on the initial probe like
    the CNOT copy.
    """
    name = f"partial:{theta:.12g}" if basis == "z" else f"partial-x:{theta:.12g}"
    return CollectiveAttackSpec(2, _controlled_probe_op(ry(theta), basis), name=name)


def compose(first: CollectiveAttackSpec, second: CollectiveAttackSpec, name: str | None = None) -> CollectiveAttackSpec:
    """Run ``first`` with its own probe, then ``second`` with another; probe = first (x) second."""
    da, db = first.probe_dim, second.probe_dim
    ua = first.unitary.reshape(da, 2, da, 2)
    ub = second.unitary.reshape(db, 2, db, 2)
    eye_a, eye_b = np.eye(da), np.eye(db)
    ua_full = np.einsum("asct,bd->abscdt", ua, eye_b).reshape(2 * da * db, 2 * da * db)
    ub_full = np.einsum("ac,bsdt->abscdt", eye_a, ub).reshape(2 * da * db, 2 * da * db)
    probe = np.kron(first.initial_probe, second.initial_probe)
    return CollectiveAttackSpec(da * db, ub_full @ ua_full, name=name or f"{first.name}+{second.name}",
                                initial_probe=probe)


def builtin_attack(ident: str) -> CollectiveAttackSpec:
    """Resolve ``identity``, ``bitflip``, ``cnot-z``, ``cnot-x``, ``partial:<theta>``, ``partial-x:<theta>``."""
    ident = ident.strip()
    simple = {
        "identity": identity_attack,
        "bitflip": bitflip_attack,
        "cnot-z": lambda: cnot_attack("z"),
        "cnot-x": lambda: cnot_attack("x"),
    }
    if ident in simple:
        return simple[ident]()
    for prefix, basis in (("partial:", "z"), ("partial-x:", "x")):
        if ident.startswith(prefix):
            try:
                theta = float(ident[len(prefix):])
            except ValueError:
                raise AttackError(f"bad angle in attack id {ident!r}") from None
            return partial_copy_attack(theta, basis)
    raise AttackError(f"unknown attack {ident!r}; known: {', '.join(simple)}, partial:<theta>, partial-x:<theta>")


def builtin_suite() -> list[CollectiveAttackSpec]:
    return [
        identity_attack(),
        bitflip_attack(),
        cnot_attack("z"),
        cnot_attack("x"),
        partial_copy_attack(math.pi / 3),
        partial_copy_attack(2 * math.pi / 3),
        partial_copy_attack(math.pi / 6, "x"),
    ]


def random_attack(probe_dim: int, rng: np.random.Generator) -> CollectiveAttackSpec:
    """Haar-ish random unitary on (probe, qubit) via QR of a complex Gaussian matrix."""
    d = 2 * probe_dim
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return CollectiveAttackSpec(probe_dim, q, name=f"random-d{probe_dim}")


# --- text format --------------------------------------------------------------

def format_attack(attack: CollectiveAttackSpec) -> str:
    u = attack.unitary
    lines = [str(attack.probe_dim), f"{u.shape[0]} {u.shape[1]}"]
    lines += [" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row) for row in u]
    return "\n".join(lines) + "\n"


def parse_attack(text: str, name: str = "custom") -> CollectiveAttackSpec:
    """``probe_dim`` on the first line, then the unitary in the shared matrix text form."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        probe_dim = int(lines[0][0])
        rows, cols = (int(t) for t in lines[1])
        body = [[complex(tok.replace("i", "j")) for tok in row] for row in lines[2:]]
    except (IndexError, ValueError) as exc:
        raise AttackError(f"malformed attack spec: {exc}") from exc
    if len(body) != rows or any(len(row) != cols for row in body):
        raise AttackError(f"attack matrix body does not match header {rows}x{cols}")
    try:
        return CollectiveAttackSpec(probe_dim, np.array(body), name=name)
    except QuantumError as exc:
        raise AttackError(str(exc)) from exc
