"""The BB84-INFO-z protocol as an ordered exchange between Alice and Bob.

INFO and TEST-Z bits travel in the z basis, TEST-X bits in the x basis.  Bob
keeps every qubit until Alice has published the basis string, so nothing is
discarded.  The quantum channel is where the collective attack acts; the
classical channel is authenticated and only records what is published.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import attacks, gf2
from .attacks import CollectiveAttackSpec
from .quantum import basis_ket
from .rng import stream


class ProtocolError(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Exact rational from ``"a/b"``, a decimal string, an int or a Fraction."""
    if isinstance(value, float):
        # go through repr so 0.1 means 1/10, not the nearest binary float
        value = repr(value)
    try:
        frac = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ProtocolError(f"not a rational number: {value!r}") from exc
    return frac


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    n: int
    n_z: int
    n_x: int
    p_az: Fraction
    p_ax: Fraction
    code: gf2.LinearCodeSpec
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "n_z", "n_x"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ProtocolError(f"{name} must be a non-negative integer, got {v!r}")
        if self.n < 1:
            raise ProtocolError("n must be at least 1")
        for name in ("p_az", "p_ax"):
            p = as_fraction(getattr(self, name))
            if not 0 <= p <= 1:
                raise ProtocolError(f"{name} must lie in [0, 1], got {p}")
            object.__setattr__(self, name, p)
        if self.code.n != self.n:
            raise ProtocolError(f"code has block length {self.code.n} but n = {self.n}")
        if self.code.r > 0 and self.n > gf2.MAX_DECODE_N:
            raise ProtocolError(
                f"n = {self.n} exceeds the exhaustive decoder cap {gf2.MAX_DECODE_N} (only r = 0 codes allowed)")

    @property
    def N(self) -> int:
        return self.n + self.n_z + self.n_x


@dataclass(frozen=True, eq=False)
class Partition:
    """Indicator strings of the INFO (s), TEST-Z (z) and TEST-X (b) positions."""

    s: np.ndarray
    z: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        s, z, b = (np.asarray(v, dtype=np.uint8) for v in (self.s, self.z, self.b))
        if not (s.shape == z.shape == b.shape):
            raise ProtocolError("partition strings differ in length")
        if np.any(s + z + b != 1):
            raise ProtocolError("partition strings must have disjoint supports covering every index")
        for v, name in ((s, "s"), (z, "z"), (b, "b")):
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def info(self) -> np.ndarray:
        return np.flatnonzero(self.s)

    @property
    def test_z(self) -> np.ndarray:
        return np.flatnonzero(self.z)

    @property
    def test_x(self) -> np.ndarray:
        return np.flatnonzero(self.b)


def sample_partition(N: int, n: int, n_z: int, n_x: int, rng: np.random.Generator) -> Partition:
    """Uniformly random partition: a random permutation of the label multiset."""
    if N != n + n_z + n_x or min(n, n_z, n_x) < 0:
        raise ProtocolError(f"N = {N} does not equal n + n_z + n_x = {n + n_z + n_x}")
    labels = rng.permutation(np.repeat(np.arange(3, dtype=np.uint8), [n, n_z, n_x]))
    return Partition(labels == 0, labels == 1, labels == 2)


class QuantumMemory:
    """Bob's stored qubits, already touched by Eve's collective attack.

    Holds the preparation privately; outcomes are sampled only when Bob measures.
    """

    def __init__(self, sent_bits, sent_bases, attack: CollectiveAttackSpec):
        self._bits = np.asarray(sent_bits, dtype=np.uint8)
        self._bases = np.asarray(sent_bases, dtype=np.uint8)
        self._attack = attack
        self.measured = False

    def __len__(self):
        return self._bits.size

    def measure(self, bases, rng: np.random.Generator) -> np.ndarray:
        if self.measured:
            raise ProtocolError("qubits were already measured")
        bases = np.asarray(bases, dtype=np.uint8)
        if bases.shape != self._bits.shape:
            raise ProtocolError("basis string length does not match the stored qubits")
        self.measured = True
        # flip[prep_basis, meas_basis, bit]: probability the outcome differs from bit
        flip = _flip_table(self._attack)
        p = flip[self._bases, bases, self._bits]
        return (self._bits ^ (rng.random(self._bits.size) < p)).astype(np.uint8)

    def probe_states(self) -> list:
        return [attacks.eve_probe_state(self._attack, int(bit), "zx"[int(basis)])
                for bit, basis in zip(self._bits, self._bases)]


def _flip_table(attack: CollectiveAttackSpec) -> np.ndarray:
    table = np.empty((2, 2, 2))
    for pb, prep in enumerate("zx"):
        for mb, meas in enumerate("zx"):
            for bit in (0, 1):
                joint = attack.output_state(bit, prep).reshape(attack.probe_dim, 2)
                amp = joint @ basis_ket(1 - bit, meas).conj()
                table[pb, mb, bit] = min(1.0, float(np.vdot(amp, amp).real))
    table[table < 1e-15] = 0.0
    return table


def transmit_and_measure(i, bases, attack: CollectiveAttackSpec, rng: np.random.Generator,
                         record_probes: bool = False):
    """Send ``i`` encoded in ``bases`` through the attack and measure each qubit in its own basis.

    Returns Bob's string and, when ``record_probes`` is set, Eve's per-qubit probe states.
    """
    memory = QuantumMemory(i, bases, attack)
    i_b = memory.measure(bases, rng)
    probes = memory.probe_states() if record_probes else None
    return i_b, probes


def evaluate_test(c_z, c_b, p_az, p_ax) -> bool:
    """Pass unless more than n_z * p_az TEST-Z or more than n_x * p_ax TEST-X bits differ."""
    c_z, c_b = np.asarray(c_z), np.asarray(c_b)
    return (gf2.weight(c_z) <= c_z.size * as_fraction(p_az)
            and gf2.weight(c_b) <= c_b.size * as_fraction(p_ax))


@dataclass(frozen=True)
class Message:
    step: int
    sender: str
    name: str
    value: str


class ClassicalChannel:
    """Authenticated public channel; keeps the ordered log of everything sent."""

    def __init__(self):
        self.log: list[Message] = []

    def publish(self, step: int, sender: str, name: str, value: str) -> str:
        if self.log and step < self.log[-1].step:
            raise ProtocolError(f"step {step} message {name!r} sent after step {self.log[-1].step}")
        self.log.append(Message(step, sender, name, value))
        return value


@dataclass(frozen=True, eq=False)
class ProtocolTranscript:
    partition: Partition
    i: np.ndarray
    i_b: np.ndarray
    c_s: np.ndarray
    c_z: np.ndarray
    c_b: np.ndarray
    test_passed: bool
    xi: np.ndarray | None
    k_a: np.ndarray | None
    k_b: np.ndarray | None
    messages: tuple = ()
    probes: list | None = field(default=None, repr=False)

    @property
    def aborted(self) -> bool:
        return not self.test_passed

    @property
    def keys_equal(self) -> bool | None:
        if self.k_a is None:
            return None
        return bool(np.array_equal(self.k_a, self.k_b))

    @property
    def c(self) -> np.ndarray:
        return self.i ^ self.i_b


class _Phase(enum.IntEnum):
    START = 0
    PREPARED = 2
    SENT = 3
    MEASURED = 4
    INFO_ANNOUNCED = 5
    TESTED = 6
    RECONCILED = 8
    DONE = 9


class _Party:
    def __init__(self, name: str, cfg: ProtocolConfig, channel: ClassicalChannel):
        self.name = name
        self.cfg = cfg
        self.channel = channel
        self.phase = _Phase.START

    def _advance(self, expected: _Phase, new: _Phase):
        if self.phase != expected:
            raise ProtocolError(f"{self.name}: cannot go to {new.name} from {self.phase.name}")
        self.phase = new


class Alice(_Party):
    def __init__(self, cfg, channel, rng):
        super().__init__("alice", cfg, channel)
        self.rng = rng

    def prepare(self):
        cfg = self.cfg
        self.partition = sample_partition(cfg.N, cfg.n, cfg.n_z, cfg.n_x, self.rng)
        self.i = self.rng.integers(0, 2, size=cfg.N, dtype=np.uint8)
        self._advance(_Phase.START, _Phase.PREPARED)

    def send_qubits(self, attack):
        self._advance(_Phase.PREPARED, _Phase.SENT)
        return QuantumMemory(self.i, self.partition.b, attack)

    def announce_bases(self):
        if self.phase != _Phase.SENT:
            raise ProtocolError("bases are published only after every qubit was sent")
        return gf2.as_bits(self.channel.publish(4, self.name, "b", gf2.bits_to_str(self.partition.b)))

    def announce_info_set(self):
        self._advance(_Phase.SENT, _Phase.INFO_ANNOUNCED)
        return gf2.as_bits(self.channel.publish(5, self.name, "s", gf2.bits_to_str(self.partition.s)))

    def test_values(self):
        return self.i

    def finish_test(self, passed: bool):
        self._advance(_Phase.INFO_ANNOUNCED, _Phase.TESTED if passed else _Phase.DONE)

    def send_syndrome(self):
        self._advance(_Phase.TESTED, _Phase.RECONCILED)
        self.x = self.i[self.partition.info]
        xi = gf2.syndrome(self.x, self.cfg.code.pc)
        return gf2.as_bits(self.channel.publish(8, self.name, "xi", gf2.bits_to_str(xi)))

    def final_key(self):
        self._advance(_Phase.RECONCILED, _Phase.DONE)
        return gf2.apply_key_map(self.x, self.cfg.code.pk)


class Bob(_Party):
    def __init__(self, cfg, channel, rng):
        super().__init__("bob", cfg, channel)
        self.rng = rng

    def store(self, memory: QuantumMemory):
        self._advance(_Phase.START, _Phase.SENT)
        self.memory = memory

    def measure(self, bases):
        self._advance(_Phase.SENT, _Phase.MEASURED)
        self.i_b = self.memory.measure(bases, self.rng)

    def learn_info_set(self, s):
        self._advance(_Phase.MEASURED, _Phase.INFO_ANNOUNCED)
        self.info = np.flatnonzero(s)

    def test_values(self):
        return self.i_b

    def finish_test(self, passed: bool):
        self._advance(_Phase.INFO_ANNOUNCED, _Phase.TESTED if passed else _Phase.DONE)

    def reconcile(self, xi):
        self._advance(_Phase.TESTED, _Phase.RECONCILED)
        self.x_hat = gf2.decode_to_coset_leader(self.i_b[self.info], self.cfg.code.pc, xi)

    def final_key(self):
        self._advance(_Phase.RECONCILED, _Phase.DONE)
        return gf2.apply_key_map(self.x_hat, self.cfg.code.pk)


def run_protocol(cfg: ProtocolConfig, attack: CollectiveAttackSpec, trial: int = 0,
                 record_probes: bool = False) -> ProtocolTranscript:
    """One full run, steps 2 to 9, drawing from the stream ``(cfg.seed, trial)``."""
    rng = stream(cfg.seed, trial)
    channel = ClassicalChannel()
    alice, bob = Alice(cfg, channel, rng), Bob(cfg, channel, rng)

    alice.prepare()
    memory = alice.send_qubits(attack)
    bob.store(memory)
    probes = memory.probe_states() if record_probes and attack.probe_dim ** cfg.n <= attacks.MAX_EVE_DIM else None

    bob.measure(alice.announce_bases())
    bob.learn_info_set(alice.announce_info_set())

    part = alice.partition
    tests = np.flatnonzero(part.s == 0)
    a_vals, b_vals = alice.test_values()[tests], bob.test_values()[tests]
    channel.publish(6, "both", "test_values",
                    f"alice={gf2.bits_to_str(a_vals)};bob={gf2.bits_to_str(b_vals)}")

    c = alice.i ^ bob.i_b
    c_s, c_z, c_b = c[part.info], c[part.test_z], c[part.test_x]
    passed = evaluate_test(c_z, c_b, cfg.p_az, cfg.p_ax)
    channel.publish(6, "both", "verdict", "pass" if passed else "abort")
    alice.finish_test(passed)
    bob.finish_test(passed)

    xi = k_a = k_b = None
    if passed:
        xi = alice.send_syndrome()
        bob.reconcile(xi)
        k_a, k_b = alice.final_key(), bob.final_key()

    return ProtocolTranscript(part, alice.i, bob.i_b, c_s, c_z, c_b, bool(passed), xi, k_a, k_b,
                              tuple(channel.log), probes)


def _run_chunk(args):
    cfg, attack, trials = args
    return [run_protocol(cfg, attack, t) for t in trials]


def run_trials(cfg: ProtocolConfig, attack: CollectiveAttackSpec, trials: int, workers: int = 1) -> list:
    """Transcripts for trials 0..trials-1, in trial order regardless of ``workers``."""
    if workers <= 1:
        return [run_protocol(cfg, attack, t) for t in range(trials)]
    chunks = np.array_split(np.arange(trials), workers * 4)
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(_run_chunk, [(cfg, attack, [int(t) for t in ch]) for ch in chunks if ch.size])
    return [tr for part in parts for tr in part]


# --- benign noise ---------------------------------------------------------

def _bisect_angle(target: float, basis: str, tol: float = 1e-12) -> float:
    """Angle whose partial-copy attack in ``basis`` induces error rate ``target`` in the other basis."""
    other = "x" if basis == "z" else "z"
    lo, hi = 0.0, math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if attacks.error_rate(attacks.partial_copy_attack(mid, basis), other) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


NOISE_FRONTIER = "0 <= flip_prob_z <= 0.5 and 0 <= flip_prob_x <= 0.5"


def channel_noise_wrapper(flip_prob_z: float, flip_prob_x: float) -> CollectiveAttackSpec:
    """A unitary-dilation attack that flips z-basis bits with ``flip_prob_z`` and x-basis bits with ``flip_prob_x``.

    x-basis errors come from a partial z-copy onto one probe qubit and z-basis
    errors from a partial x-copy onto a second; the two do not interfere, so
    the rates are set independently.  Realizable: each rate in [0, 1/2].
    """
    qz, qx = float(flip_prob_z), float(flip_prob_x)
    if not (0.0 <= qz <= 0.5 and 0.0 <= qx <= 0.5):
        raise ProtocolError(f"noise pair ({qz}, {qx}) not realizable; frontier: {NOISE_FRONTIER}")
    if qz == 0 and qx == 0:
        return attacks.identity_attack()
    if qz == 0 and qx == 0.5:
        return attacks.cnot_attack("z")
    if qz == 0.5 and qx == 0:
        return attacks.cnot_attack("x")
    parts = []
    if qx > 0:
        parts.append(attacks.partial_copy_attack(_bisect_angle(qx, "z"), "z"))
    if qz > 0:
        parts.append(attacks.partial_copy_attack(_bisect_angle(qz, "x"), "x"))
    attack = parts[0] if len(parts) == 1 else attacks.compose(parts[0], parts[1])
    return attacks.CollectiveAttackSpec(attack.probe_dim, attack.unitary, name=f"noise:{qz:g}:{qx:g}",
                                        initial_probe=attack.initial_probe)
