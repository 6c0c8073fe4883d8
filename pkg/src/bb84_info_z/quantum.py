"""Dense complex linear algebra for small quantum systems.

Composite systems are ordered probe first, transmitted qubit second, so the
basis index of ``|e>_E |t>_T`` is ``e * 2 + t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-9
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# off-diagonal residue small enough that trace norms are exact far below 1e-9
TRACE_NORM_ABS_TOL = 1e-14

SQRT_HALF = np.sqrt(0.5)
KET = {
    ("z", 0): np.array([1.0, 0.0], dtype=complex),
    ("z", 1): np.array([0.0, 1.0], dtype=complex),
    ("x", 0): np.array([SQRT_HALF, SQRT_HALF], dtype=complex),
    ("x", 1): np.array([SQRT_HALF, -SQRT_HALF], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


class QuantumError(ValueError):
    pass


def basis_ket(bit: int, basis: str) -> np.ndarray:
    """|bit> in the z (computational) or x (Hadamard) basis."""
    try:
        return KET[(basis, int(bit))].copy()
    except KeyError:
        raise QuantumError(f"no basis state for bit={bit!r}, basis={basis!r}") from None


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) <= tol


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) <= tol


@nb.njit(cache=True)
def _jacobi_sweeps(a, rel_tol, abs_tol, max_sweeps):
    n = a.shape[0]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j].real ** 2 + a[i, j].imag ** 2
    target = max((rel_tol ** 2) * fro2, abs_tol ** 2)
    # pairs below this cannot keep off2 above target on their own
    skip2 = target / max(n * (n - 1), 1)
    for sweep in range(max_sweeps):
        off2 = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off2 += a[i, j].real ** 2 + a[i, j].imag ** 2
        if off2 <= target:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag2 = apq.real ** 2 + apq.imag ** 2
                if mag2 <= skip2:
                    continue
                mag = np.sqrt(mag2)
                # phase on q makes a[p, q] real, then a real rotation zeroes it
                ph = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sph = s * ph
                cph = c * ph
                # rows p, q change as [[c, -s ph], [s, c ph]]; columns follow by symmetry
                for k in range(n):
                    if k == p or k == q:
                        continue
                    apk = a[p, k]
                    aqk = a[q, k]
                    npk = c * apk - sph * aqk
                    nqk = s * apk + cph * aqk
                    a[p, k] = npk
                    a[q, k] = nqk
                    a[k, p] = npk.conjugate()
                    a[k, q] = nqk.conjugate()
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
    return -1


def hermitian_eigenvalues(h, abs_tol: float = 0.0) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in descending order (cyclic Jacobi).

    Sweeps stop once the off-diagonal Frobenius norm is below
    ``max(1e-12 * ||h||_F, abs_tol)``; each eigenvalue is then off by at most
    that norm.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise QuantumError("matrix is not Hermitian")
    a = np.ascontiguousarray(0.5 * (h + h.conj().T))
    sweeps = _jacobi_sweeps(a, JACOBI_REL_TOL, abs_tol, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise QuantumError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return np.sort(np.diag(a).real)[::-1]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian PSD matrix with unit trace, or trace <= 1 when ``subnormalized``."""

    matrix: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise QuantumError("density matrix must be square")
        if not is_hermitian(mat):
            raise QuantumError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if self.subnormalized:
            if tr > 1 + TRACE_TOL or tr < -TRACE_TOL:
                raise QuantumError(f"subnormalized trace {tr} outside [0, 1]")
        elif abs(tr - 1) > TRACE_TOL:
            raise QuantumError(f"trace {tr} is not 1")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.matrix)

    def is_psd(self, tol: float = TRACE_TOL) -> bool:
        return bool(self.eigenvalues()[-1] >= -tol)

    def __str__(self) -> str:
        return format_complex_matrix(self.matrix)


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)


def trace_norm(h) -> float:
    return float(np.abs(hermitian_eigenvalues(h, abs_tol=TRACE_NORM_ABS_TOL)).sum())


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = _mat(rho), _mat(sigma)
    if a.shape != b.shape:
        raise QuantumError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (is_hermitian(a) and is_hermitian(b)):
        raise QuantumError("trace distance needs Hermitian arguments")
    return 0.5 * trace_norm(a - b)


def trace_distance_factored(ya, wa: float, yb, wb: float) -> float:
    """Trace distance between ``wa * ya ya^dag`` and ``wb * yb yb^dag``.

    The difference is ``Y D Y^dag`` with ``Y = [ya | yb]``.  When Y has fewer
    columns than rows, a QR basis change ``Y = QR`` shrinks the eigenproblem to
    ``R D R^dag`` without changing the spectrum's nonzero part.
    """
    ya, yb = np.asarray(ya, dtype=complex), np.asarray(yb, dtype=complex)
    if ya.shape[0] != yb.shape[0]:
        raise QuantumError(f"dimension mismatch: {ya.shape[0]} vs {yb.shape[0]}")
    y = np.hstack([ya, yb])
    d = np.concatenate([np.full(ya.shape[1], wa), np.full(yb.shape[1], -wb)])
    if y.shape[1] < y.shape[0]:
        _, rfac = np.linalg.qr(y)
        core = (rfac * d) @ rfac.conj().T
    else:
        core = (y * d) @ y.conj().T
    return 0.5 * trace_norm(0.5 * (core + core.conj().T))


def partial_trace(rho, keep: str, dims: tuple[int, int]):
    """Reduce a state on A (x) B to subsystem ``keep`` ("A" or "B")."""
    mat = _mat(rho)
    d_a, d_b = dims
    if mat.shape != (d_a * d_b, d_a * d_b):
        raise QuantumError(f"state of dimension {mat.shape[0]} does not factor as {d_a}x{d_b}")
    t = mat.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        out = np.einsum("ijkj->ik", t)
    elif keep == "B":
        out = np.einsum("ijil->jl", t)
    else:
        raise QuantumError(f"keep must be 'A' or 'B', not {keep!r}")
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, subnormalized=rho.subnormalized)
    return out


def apply_unitary(u, psi) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if u.ndim != 2 or u.shape[1] != psi.shape[0]:
        raise QuantumError(f"dimension mismatch: operator {u.shape}, state {psi.shape}")
    if not is_unitary(u):
        raise QuantumError("operator is not unitary")
    return u @ psi


def format_complex_matrix(mat) -> str:
    """One row per line, entries written as ``a+bi``."""
    rows = []
    for row in np.asarray(mat, dtype=complex):
        rows.append(" ".join(f"{z.real:.10g}{z.imag:+.10g}i" for z in row))
    return "\n".join(rows)
