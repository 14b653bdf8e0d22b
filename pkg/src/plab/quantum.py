"""Finite-dimensional quantum environments and d-copy discrimination.

States are density matrices (Hermitian within 1e-12, eigenvalues >= -1e-10,
unit trace within 1e-12); measurements are POVMs (PSD elements within 1e-10
summing to the identity within 1e-10 in operator norm).  The module provides
tensor powers under a dimension cap, trace distance, the closed-form pure
state distance 2*sqrt(1-gamma^(2d)), the optimal two-outcome measurement for
binary discrimination and its success-sum bound 1 + ||rho0^d - rho1^d||_1 / 2,
Born-rule kernels, reliability bounds (delta_min, d_min), bipartite
correlation tables, and a no-signaling checker.

Everything is dense complex numpy; randomness comes from caller-supplied
generators so property batches stay reproducible.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tasks import Kernel

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
STATE_EIG_TOL = 1e-10
POVM_TOL = 1e-10
DEFAULT_DIM_CAP = 1 << 10


class ResourceCapError(RuntimeError):
    """Raised when a tensor power would exceed the configured dimension cap."""


def dim_cap() -> int:
    """Current tensor-dimension cap; the PLAB_DIM_CAP env var overrides the
    default of 2^10 (read at call time)."""
    raw = os.environ.get("PLAB_DIM_CAP")
    return int(raw) if raw else DEFAULT_DIM_CAP


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


class DensityMatrix:
    """Validated quantum state."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        m = np.array(mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("state must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
            raise ValueError("state is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError("state trace is not 1 within 1e-12")
        if np.linalg.eigvalsh(_hermitize(m)).min() < -STATE_EIG_TOL:
            raise ValueError("state has an eigenvalue below -1e-10")
        m.setflags(write=False)
        self.mat = m

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def pure(cls, ket: Sequence[complex]) -> "DensityMatrix":
        """|psi><psi| for the given ket (normalized here)."""
        v = np.asarray(ket, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero vector is not a state")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis_state(cls, dim: int, k: int) -> "DensityMatrix":
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        return cls.pure(v)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": matrix_to_json(self.mat)}

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        m = matrix_from_json(obj["entries"])
        if "dim" in obj and int(obj["dim"]) != m.shape[0]:
            raise ValueError("declared dim does not match entries")
        return cls(m)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


class Povm:
    """Validated measurement: PSD elements summing to the identity."""

    __slots__ = ("elements", "labels")

    def __init__(self, elements: Sequence, labels: Sequence | None = None):
        mats = [np.array(e, dtype=complex) for e in elements]
        if not mats:
            raise ValueError("POVM needs at least one element")
        dim = mats[0].shape[0]
        for e in mats:
            if e.ndim != 2 or e.shape != (dim, dim):
                raise ValueError("POVM elements must be square matrices of equal dimension")
            if np.max(np.abs(e - e.conj().T)) > POVM_TOL:
                raise ValueError("POVM element is not Hermitian within 1e-10")
            if np.linalg.eigvalsh(_hermitize(e)).min() < -POVM_TOL:
                raise ValueError("POVM element has an eigenvalue below -1e-10")
            e.setflags(write=False)
        gap = np.linalg.eigvalsh(_hermitize(sum(mats) - np.eye(dim)))
        if np.max(np.abs(gap)) > POVM_TOL:
            raise ValueError("POVM elements do not sum to the identity within 1e-10")
        self.elements = tuple(mats)
        self.labels = tuple(labels) if labels is not None else tuple(range(len(mats)))
        if len(self.labels) != len(self.elements):
            raise ValueError("one label per element required")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "elements": [matrix_to_json(e) for e in self.elements]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        return cls([matrix_from_json(e) for e in obj["elements"]], obj.get("labels"))

    def __repr__(self) -> str:
        return f"Povm({len(self.elements)} outcomes, dim={self.dim})"


def matrix_to_json(m: np.ndarray) -> list:
    """Complex matrix as row-major [re, im] pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def tensor_power(rho: DensityMatrix, d: int, cap: int | None = None) -> DensityMatrix:
    """d-fold Kronecker power of a state; trace stays 1.

    Raises ResourceCapError when dim^d exceeds the cap (default dim_cap()).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    limit = dim_cap() if cap is None else cap
    if rho.dim**d > limit:
        raise ResourceCapError(f"dimension {rho.dim}^{d} exceeds cap {limit}")
    if d == 1:
        return rho
    out = rho.mat
    for _ in range(d - 1):
        out = np.kron(out, rho.mat)
    return DensityMatrix(out)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """||rho - sigma||_1: sum of absolute eigenvalues of the difference."""
    if rho.dim != sigma.dim:
        raise ValueError("dimension mismatch")
    return float(np.sum(np.abs(np.linalg.eigvalsh(_hermitize(rho.mat - sigma.mat)))))


def pure_distance_formula(gamma: float, d: int) -> float:
    """Closed-form ||.||_1 distance of d copies of pure states with overlap
    gamma: 2*sqrt(1 - gamma^(2d))."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("overlap gamma must lie in [0,1]")
    if d < 1:
        raise ValueError("d must be >= 1")
    return 2.0 * math.sqrt(max(0.0, 1.0 - gamma ** (2 * d)))


def helstrom_povm(
    rho0: DensityMatrix, rho1: DensityMatrix, d: int = 1, cap: int | None = None, band: float = 1e-10
) -> Povm:
    """Optimal two-outcome measurement for rho0^(x)d vs rho1^(x)d.

    M_0 projects onto the eigenspace of Delta = rho0^d - rho1^d with
    eigenvalues > band; M_1 = I - M_0.  Eigenvalues inside the band join M_1;
    the achieved success sum is unaffected beyond tolerance.
    """
    if rho0.dim != rho1.dim:
        raise ValueError("dimension mismatch")
    delta = tensor_power(rho0, d, cap).mat - tensor_power(rho1, d, cap).mat
    w, v = np.linalg.eigh(_hermitize(delta))
    pos = v[:, w > band]
    m0 = pos @ pos.conj().T
    m1 = np.eye(rho0.dim**d, dtype=complex) - m0
    return Povm([m0, m1], labels=(0, 1))


def helstrom_bound(rho0: DensityMatrix, rho1: DensityMatrix, d: int = 1, cap: int | None = None) -> float:
    """Largest achievable success sum tr(M0 rho0^d) + tr(M1 rho1^d):
    1 + ||rho0^d - rho1^d||_1 / 2."""
    return 1.0 + 0.5 * trace_distance(tensor_power(rho0, d, cap), tensor_power(rho1, d, cap))


def discrimination_sum(
    povm: Povm, rho0: DensityMatrix, rho1: DensityMatrix, d: int = 1, cap: int | None = None
) -> float:
    """Success sum tr(M0 rho0^d) + tr(M1 rho1^d) for a two-outcome POVM."""
    if len(povm.elements) != 2:
        raise ValueError("binary discrimination needs a two-outcome POVM")
    r0 = tensor_power(rho0, d, cap).mat
    r1 = tensor_power(rho1, d, cap).mat
    if povm.dim != r0.shape[0]:
        raise ValueError("POVM dimension does not match the d-copy states")
    return float(np.trace(povm.elements[0] @ r0).real + np.trace(povm.elements[1] @ r1).real)


def born_kernel(povm: Povm, states: Sequence[DensityMatrix], d: int = 1, cap: int | None = None) -> Kernel:
    """Kernel Q(h|theta) = tr(M_h rho_theta^(x)d); rows are probability
    vectors within 1e-10 (tiny negative traces are clamped)."""
    rows = []
    for rho in states:
        rd = tensor_power(rho, d, cap).mat
        if povm.dim != rd.shape[0]:
            raise ValueError("POVM dimension does not match the d-copy states")
        row = [float(np.trace(e @ rd).real) for e in povm.elements]
        if any(p < -POVM_TOL for p in row) or abs(sum(row) - 1.0) > POVM_TOL:
            raise ValueError("Born row is not a probability vector within 1e-10")
        rows.append([max(p, 0.0) for p in row])
    return Kernel(rows, hyps=[str(h) for h in povm.labels])


def delta_min(gamma: float, d: int) -> float:
    """Smallest worst-case error of any two-sided test on d copies of pure
    states with overlap gamma: (1 - sqrt(1 - gamma^(2d)))/2."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("overlap gamma must lie in [0,1]")
    if d < 1:
        raise ValueError("d must be >= 1")
    return (1.0 - math.sqrt(max(0.0, 1.0 - gamma ** (2 * d)))) / 2.0


def copies_min(gamma: float, delta: float) -> int:
    """Smallest integer d >= ln(1/(4*delta*(1-delta)))/(-2*ln(gamma)), at
    least 1; the copy count below which worst-case error delta is impossible.

    gamma in {0,1} is degenerate (orthogonal states need no copies; identical
    states never separate) and raises.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma in {0,1} is degenerate for a copy count")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    r = math.log(1.0 / (4.0 * delta * (1.0 - delta))) / (-2.0 * math.log(gamma))
    return max(1, math.ceil(r - 1e-12))


def discrimination_bounds(gamma: float, d: int | None = None, delta: float | None = None) -> dict:
    """Bundle of reliability bounds: delta_min for given d, d_min for given
    delta (whichever arguments are present; at least one required)."""
    if d is None and delta is None:
        raise ValueError("provide d (for delta_min) and/or delta (for d_min)")
    out: dict = {"gamma": gamma}
    if d is not None:
        out["delta_min"] = delta_min(gamma, d)
    if delta is not None:
        out["d_min"] = copies_min(gamma, delta)
    return out


class CorrelationTable:
    """Bipartite conditional probabilities p[a][b][x][y] over finite
    alphabets; nonnegative and normalized per setting pair within 1e-12."""

    __slots__ = ("p",)

    def __init__(self, p):
        arr = np.array(p, dtype=float)
        if arr.ndim != 4:
            raise ValueError("table must have axes (a, b, x, y)")
        if arr.min() < -1e-12:
            raise ValueError(f"negative probability {arr.min()!r}")
        sums = arr.sum(axis=(0, 1))
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise ValueError("outcome sums must be 1 within 1e-12 for every setting pair")
        arr = np.clip(arr, 0.0, None)
        arr.setflags(write=False)
        self.p = arr

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.p.shape

    def __repr__(self) -> str:
        return f"CorrelationTable(shape={self.p.shape})"


def quantum_correlation(
    rho_ab: DensityMatrix, alice_povms: Sequence[Povm], bob_povms: Sequence[Povm]
) -> CorrelationTable:
    """Born-rule table p(a,b|x,y) = tr[(M^x_a (x) N^y_b) rho_AB].

    All Alice settings must share an outcome count, likewise Bob; the product
    of local dimensions must match the joint state.
    """
    n_a = {len(p.elements) for p in alice_povms}
    n_b = {len(p.elements) for p in bob_povms}
    if len(n_a) != 1 or len(n_b) != 1:
        raise ValueError("outcome counts must agree across settings")
    da = {p.dim for p in alice_povms}
    db = {p.dim for p in bob_povms}
    if len(da) != 1 or len(db) != 1:
        raise ValueError("local dimensions must agree across settings")
    da, db = da.pop(), db.pop()
    if da * db != rho_ab.dim:
        raise ValueError(f"local dims {da}x{db} do not compose to {rho_ab.dim}")
    nA, nB, nX, nY = n_a.pop(), n_b.pop(), len(alice_povms), len(bob_povms)
    table = np.empty((nA, nB, nX, nY))
    for x, ma in enumerate(alice_povms):
        for y, nb in enumerate(bob_povms):
            for a, ea in enumerate(ma.elements):
                for b, eb in enumerate(nb.elements):
                    table[a, b, x, y] = np.trace(np.kron(ea, eb) @ rho_ab.mat).real
    return CorrelationTable(table)


@dataclass(frozen=True)
class NoSignalingVerdict:
    passed: bool
    max_violation: float


def check_no_signaling(t: CorrelationTable, tol: float = 1e-10) -> NoSignalingVerdict:
    """Marginals must ignore the far party's setting: sum_a p(a,b|x,y) equal
    across x for each (b,y), and sum_b p(a,b|x,y) across y for each (a,x).
    Reports the worst deviation found."""
    marg_b = t.p.sum(axis=0)  # (B, X, Y); must not depend on x
    dev_b = float((marg_b.max(axis=1) - marg_b.min(axis=1)).max())
    marg_a = t.p.sum(axis=1)  # (A, X, Y); must not depend on y
    dev_a = float((marg_a.max(axis=2) - marg_a.min(axis=2)).max())
    worst = max(dev_a, dev_b)
    return NoSignalingVerdict(passed=worst <= tol, max_violation=worst)


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-rank random state: normalized G G^dagger with Ginibre G."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)

def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ket (complex Gaussian, normalized)."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_povm(dim: int, outcomes: int, rng: np.random.Generator) -> Povm:
    """Random measurement: Ginibre PSD blocks B_i conjugated by S^{-1/2} with
    S = sum B_i, so the elements sum to the identity exactly (up to float)."""
    if outcomes < 1:
        raise ValueError("need at least one outcome")
    blocks = []
    for _ in range(outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        blocks.append(g @ g.conj().T)
    s = sum(blocks)
    w, v = np.linalg.eigh(_hermitize(s))
    s_inv_half = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    return Povm([s_inv_half @ b @ s_inv_half for b in blocks])
