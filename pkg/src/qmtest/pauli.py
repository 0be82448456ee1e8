"""Generalized Pauli operators on n qudits and operator decompositions.

Site operators follow the shift-clock form sigma_{x,z} = sum_j w^{jz}|j+x><j|
(indices mod d, w = exp(2*pi*i/d)); for qubits the x=z=1 case is taken to be
the Hermitian Y so that single-site operators are I, X, Z, Y.  Labels iterate
in lexicographic (x, z) order throughout, which fixes every categorical
sampler's category order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DimensionMismatch,
    Measurement,
    QmtestError,
    ZeroOperator,
    as_operator,
    choi_prob,
    validate_measurement,
)


class DegenerateLabel(QmtestError):
    """The all-zero label does not define a two-outcome projective measurement."""


@dataclass(frozen=True)
class PauliLabel:
    """Pair (x, z) in Z_d^n x Z_d^n indexing a tensor-product Pauli operator."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    d: int = 2

    def __post_init__(self):
        if len(self.x) != len(self.z):
            raise ValueError("x and z must have equal length")
        if any(not 0 <= c < self.d for c in self.x + self.z):
            raise ValueError(f"label components must lie in [0, {self.d - 1}]")

    @property
    def n(self) -> int:
        return len(self.x)

    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    def index(self) -> int:
        """Position in the lexicographic (x, z) enumeration."""
        xi = _digits_to_index(self.x, self.d)
        zi = _digits_to_index(self.z, self.d)
        return xi * self.d ** self.n + zi


def _digits_to_index(digits: tuple[int, ...], d: int) -> int:
    v = 0
    for c in digits:
        v = v * d + c
    return v


def _index_to_digits(v: int, d: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        out.append(v % d)
        v //= d
    return tuple(reversed(out))


def label_from_index(idx: int, d: int, n: int) -> PauliLabel:
    D = d**n
    return PauliLabel(_index_to_digits(idx // D, d, n), _index_to_digits(idx % D, d, n), d)


def all_labels(d: int, n: int) -> list[PauliLabel]:
    """All d^{2n} labels in lexicographic (x, z) order."""
    return [label_from_index(i, d, n) for i in range(d ** (2 * n))]


@lru_cache(maxsize=32)
def _label_table(d: int, n: int):
    """Sparse structure of every sigma_{x,z}: row targets and phases per column.

    sigma has exactly one nonzero per column: entry (rows[l, c], c) equals
    phases[l, c].  Shapes are (d^{2n}, d^n).
    """
    D = d**n
    cols = np.arange(D)
    digits = np.empty((n, D), dtype=np.int64)
    v = cols.copy()
    for s in range(n - 1, -1, -1):
        digits[s] = v % d
        v //= d
    weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    nlabels = d ** (2 * n)
    rows = np.empty((nlabels, D), dtype=np.int64)
    phases = np.empty((nlabels, D), dtype=np.complex128)
    for idx in range(nlabels):
        x = _index_to_digits(idx // D, d, n)
        z = _index_to_digits(idx % D, d, n)
        shifted = (digits + np.array(x)[:, None]) % d
        rows[idx] = weights @ shifted
        expo = np.array(z) @ digits
        if d == 2:
            # qubit convention: sigma_{1,1} = Y = i * X @ Z per site; both
            # factors are exact integer powers of -1 and i
            ph = (-1.0) ** expo * 1j ** (sum(xi * zi for xi, zi in zip(x, z)) % 4)
        else:
            ph = np.exp(2j * np.pi * (expo % d) / d)
        phases[idx] = ph
    rows.setflags(write=False)
    phases.setflags(write=False)
    return rows, phases


@lru_cache(maxsize=32)
def _support_masks(d: int, n: int) -> np.ndarray:
    """Bitmask of nontrivial sites per label (bit s set iff site s+1 in support)."""
    D = d**n
    masks = np.zeros(d ** (2 * n), dtype=np.int64)
    for idx in range(d ** (2 * n)):
        x = _index_to_digits(idx // D, d, n)
        z = _index_to_digits(idx % D, d, n)
        m = 0
        for s in range(n):
            if x[s] or z[s]:
                m |= 1 << s
        masks[idx] = m
    masks.setflags(write=False)
    return masks


def pauli_matrix(label: PauliLabel) -> np.ndarray:
    """Dense matrix of the tensor-product operator for ``label``."""
    rows, phases = _label_table(label.d, label.n)
    idx = label.index()
    D = label.d**label.n
    out = np.zeros((D, D), dtype=np.complex128)
    out[rows[idx], np.arange(D)] = phases[idx]
    return out


def pauli_product_phase(ab: PauliLabel, cd: PauliLabel) -> complex:
    """Unit scalar beta with sigma_ab sigma_cd = beta sigma_{a+c, b+d}.

    Computed sitewise from the d x d matrices, so it is correct for either
    site convention.
    """
    if ab.d != cd.d or ab.n != cd.n:
        raise DimensionMismatch("labels must share d and n")
    d = ab.d
    beta = 1.0 + 0j
    for s in range(ab.n):
        left = pauli_matrix(PauliLabel((ab.x[s],), (ab.z[s],), d))
        right = pauli_matrix(PauliLabel((cd.x[s],), (cd.z[s],), d))
        target = pauli_matrix(
            PauliLabel(((ab.x[s] + cd.x[s]) % d,), ((ab.z[s] + cd.z[s]) % d,), d)
        )
        prod = left @ right
        r, c = np.nonzero(target)
        beta *= prod[r[0], c[0]] / target[r[0], c[0]]
    return complex(beta)


def support(label: PauliLabel) -> set[int]:
    """1-based site indices where the label acts nontrivially."""
    return {s + 1 for s in range(label.n) if label.x[s] or label.z[s]}


@dataclass(frozen=True)
class PauliDecomposition:
    """Coefficients mu_{x,z}(A) = d^{-n} <sigma_{x,z}, A> in label order."""

    d: int
    n: int
    mu: np.ndarray

    def coeff(self, label: PauliLabel) -> complex:
        return complex(self.mu[label.index()])

    def coeffs(self) -> dict[PauliLabel, complex]:
        return {
            label_from_index(i, self.d, self.n): complex(v)
            for i, v in enumerate(self.mu)
            if v != 0
        }

    def reconstruct(self) -> np.ndarray:
        return matrix_from_mu(self.mu, self.d, self.n)


def _power_check(dim: int, d: int) -> int:
    n = 0
    v = dim
    while v > 1:
        if v % d:
            raise DimensionMismatch(f"dimension {dim} is not a power of {d}")
        v //= d
        n += 1
    return n


def mu_vector(A, d: int, n: int) -> np.ndarray:
    """All d^{2n} coefficients at once via the sparse sigma structure."""
    A = as_operator(A)
    D = d**n
    if A.shape[0] != D:
        raise DimensionMismatch(f"operator dim {A.shape[0]} != {d}^{n}")
    rows, phases = _label_table(d, n)
    cols = np.arange(D)
    gathered = A[rows, cols[None, :]]
    return (phases.conj() * gathered).sum(axis=1) / D


def matrix_from_mu(mu: np.ndarray, d: int, n: int) -> np.ndarray:
    """Inverse of mu_vector: A = sum_l mu_l sigma_l."""
    D = d**n
    rows, phases = _label_table(d, n)
    A = np.zeros((D, D), dtype=np.complex128)
    vals = mu[:, None] * phases
    cols = np.broadcast_to(np.arange(D), rows.shape)
    np.add.at(A, (rows.ravel(), cols.ravel()), vals.ravel())
    return A


def decompose(A, d: int, n: int | None = None) -> PauliDecomposition:
    """Expand A in the sigma basis; dimension must equal d^n."""
    A = as_operator(A)
    if n is None:
        n = _power_check(A.shape[0], d)
    return PauliDecomposition(d=d, n=n, mu=mu_vector(A, d, n))


def f_T(A, T: set[int], d: int, n: int | None = None) -> np.ndarray:
    """Component of A supported on the site subset T (1-based sites)."""
    A = as_operator(A)
    if n is None:
        n = _power_check(A.shape[0], d)
    mu = mu_vector(A, d, n)
    tmask = 0
    for s in T:
        if not 1 <= s <= n:
            raise ValueError(f"site {s} outside 1..{n}")
        tmask |= 1 << (s - 1)
    masks = _support_masks(d, n)
    keep = (masks & ~tmask) == 0
    return matrix_from_mu(np.where(keep, mu, 0), d, n)


def g_T(A, T: set[int], d: int, n: int | None = None) -> np.ndarray:
    """Complement A - f_T(A)."""
    A = as_operator(A)
    return A - f_T(A, T, d, n)


def stabilizer_measurement(a, b) -> Measurement:
    """Projective measurement onto the +/-1 eigenspaces of sigma_{a,b}, d=2."""
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    label = PauliLabel(a, b, 2)
    if label.is_identity():
        raise DegenerateLabel("the all-zero label gives the degenerate pair {I, 0}")
    sigma = pauli_matrix(label)
    eye = np.eye(sigma.shape[0])
    return validate_measurement([(eye + sigma) / 2, (eye - sigma) / 2])


def q_distribution(M_i, d: int, n: int | None = None) -> np.ndarray:
    """Label distribution |mu_{x,z}(M_i)|^2 / p(M_i) in label order."""
    M_i = as_operator(M_i)
    if n is None:
        n = _power_check(M_i.shape[0], d)
    p = choi_prob(M_i)
    if p < 1e-14:
        raise ZeroOperator("q-distribution undefined for a (near-)zero operator")
    weights = np.abs(mu_vector(M_i, d, n)) ** 2
    # |mu|^2 sums to p(M_i) * d^n / d^n ... directly: sum |mu|^2 = |A|_F^2/d^n = p
    return weights / weights.sum()


def xi_distribution(meas: Measurement, d: int, n: int | None = None) -> np.ndarray:
    """Joint label distribution xi_{x,z} = sum_i |mu_{x,z}(M_i)|^2."""
    if n is None:
        n = _power_check(meas.dim, d)
    xi = np.zeros(d ** (2 * n))
    for op in meas.operators:
        xi += np.abs(mu_vector(op, d, n)) ** 2
    return xi / xi.sum()
