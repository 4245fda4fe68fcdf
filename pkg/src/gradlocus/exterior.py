"""Sparse exterior algebra over R^n and the antisymmetry operator.

Multivectors are graded, with basis monomials e_{i1} ^ ... ^ e_{ik}
(i1 < ... < ik) encoded as bitmasks over the n coordinate axes.  The
module hosts the operator that maps a square matrix M to the 2-vector
with coefficient (M_pq - M_qp) on e_p ^ e_q, its m-th wedge power on
R^{2m}, and a Pfaffian that serves as an independent cross-check of
the top-power coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotAntisymmetric, OddDimension

PRUNE_REL = 1e-14
PRUNE_FLOOR = 1e-300


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _merge_sign(a: int, b: int) -> int:
    # Parity of the permutation that sorts the concatenation of the two
    # ascending index lists: count pairs (i in a, j in b) with i > j.
    swaps = 0
    a >>= 1
    while a:
        swaps += _popcount(a & b)
        a >>= 1
    return -1 if swaps & 1 else 1


def _mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _indices_to_mask(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


@dataclass(frozen=True)
class MultiVector:
    """Element of Lambda^grade R^dim with sparse bitmask-keyed coefficients.

    Keys have population count ``grade`` and fit in ``dim`` bits.  The
    zero element may carry a nominal grade above ``dim`` (the result of
    wedging past the top grade); it necessarily has no coefficients.
    """

    dim: int
    grade: int
    coeffs: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch("dim must be >= 1")
        if self.grade < 0:
            raise ValueError("grade must be >= 0")
        if self.grade > self.dim and self.coeffs:
            raise ValueError("grade exceeds dim for a nonzero multivector")
        for key in self.coeffs:
            if key >> self.dim:
                raise ValueError(f"key {key:b} does not fit in {self.dim} bits")
            if _popcount(key) != self.grade:
                raise ValueError(f"key {key:b} has wrong grade")

    @classmethod
    def zero(cls, dim: int, grade: int) -> "MultiVector":
        return cls(dim=dim, grade=grade, coeffs={})

    @classmethod
    def basis_vector(cls, dim: int, i: int) -> "MultiVector":
        """e_i as a 1-vector (1-based index)."""
        if not 1 <= i <= dim:
            raise DimensionMismatch(f"index {i} outside 1..{dim}")
        return cls(dim=dim, grade=1, coeffs={1 << (i - 1): 1.0})

    @classmethod
    def from_vector(cls, v) -> "MultiVector":
        """Dense coordinate vector -> grade-1 multivector."""
        v = np.asarray(v, dtype=float)
        coeffs = {1 << i: float(c) for i, c in enumerate(v) if c != 0.0}
        return cls(dim=len(v), grade=1, coeffs=coeffs)

    def coefficient(self, indices) -> float:
        """Coefficient of e_{i1} ^ ... ^ e_{ik} for ascending 1-based indices."""
        indices = tuple(indices)
        if any(not 1 <= i <= self.dim for i in indices):
            raise DimensionMismatch(f"indices {indices} outside 1..{self.dim}")
        if list(indices) != sorted(set(indices)) or len(indices) != self.grade:
            raise ValueError(f"expected {self.grade} strictly increasing indices")
        return self.coeffs.get(_indices_to_mask(indices), 0.0)

    def terms(self):
        """Sorted (indices, coefficient) pairs."""
        return [(_mask_to_indices(k), v) for k, v in sorted(self.coeffs.items())]

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def prune(self) -> "MultiVector":
        """Drop coefficients below PRUNE_REL * max|coeff| (floor PRUNE_FLOOR)."""
        cutoff = max(PRUNE_REL * self.max_abs(), PRUNE_FLOOR)
        kept = {k: v for k, v in self.coeffs.items() if abs(v) > cutoff}
        return MultiVector(self.dim, self.grade, kept)

    def __add__(self, other: "MultiVector") -> "MultiVector":
        if self.dim != other.dim:
            raise DimensionMismatch("dimension mismatch in addition")
        if self.grade != other.grade:
            raise ValueError("grade mismatch in addition")
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs.get(k, 0.0) + v
        return MultiVector(self.dim, self.grade, coeffs).prune()

    def __rmul__(self, scalar: float) -> "MultiVector":
        s = float(scalar)
        return MultiVector(
            self.dim, self.grade, {k: s * v for k, v in self.coeffs.items()}
        ).prune()

    def __mul__(self, scalar: float) -> "MultiVector":
        return self.__rmul__(scalar)

    def __neg__(self) -> "MultiVector":
        return self.__rmul__(-1.0)

    def __xor__(self, other: "MultiVector") -> "MultiVector":
        return wedge(self, other)


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Exterior product; bilinear, associative, sign by merge parity."""
    if a.dim != b.dim:
        raise DimensionMismatch(
            f"wedge of multivectors with dims {a.dim} and {b.dim}"
        )
    grade = a.grade + b.grade
    if grade > a.dim:
        return MultiVector.zero(a.dim, grade)
    coeffs: dict[int, float] = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            if ka & kb:
                continue  # repeated axis: e_i ^ e_i = 0
            key = ka | kb
            coeffs[key] = coeffs.get(key, 0.0) + _merge_sign(ka, kb) * va * vb
    return MultiVector(a.dim, grade, coeffs).prune()


def gamma(M, basis=None) -> MultiVector:
    """2-vector sum of (M u_i) ^ u_i over an orthonormal basis.

    With the canonical basis the coefficient on e_p ^ e_q (p < q) is
    M_pq - M_qp, so the result vanishes exactly on symmetric M.  A
    supplied basis must be orthonormal (columns); the result does not
    depend on the choice, which tests exercise statistically.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    n = M.shape[0]
    if basis is None:
        coeffs = {}
        for p in range(n):
            for q in range(p + 1, n):
                c = M[p, q] - M[q, p]
                if c != 0.0:
                    coeffs[(1 << p) | (1 << q)] = float(c)
        return MultiVector(n, 2, coeffs).prune()

    U = np.asarray(basis, dtype=float)
    if U.shape != (n, n):
        raise DimensionMismatch(f"basis must be {n}x{n}, got {U.shape}")
    gram_dev = float(np.abs(U.T @ U - np.eye(n)).max())
    if gram_dev > 1e-10:
        raise ValueError(
            f"supplied basis is not orthonormal (Gram deviation {gram_dev:.3e})"
        )
    total = MultiVector.zero(n, 2)
    for i in range(n):
        u = U[:, i]
        total = total + wedge(MultiVector.from_vector(M @ u),
                              MultiVector.from_vector(u))
    return total


def gamma_power(M, m: int | None = None) -> float:
    """Coefficient of e_1 ^ ... ^ e_{2m} in the m-th wedge power of gamma(M).

    Requires n = 2m nonzero and even.  Tests validate the identity with
    m! * Pf(M - M^T) against the independent Pfaffian below; the raw
    value is returned, thresholding is the caller's concern.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    n = M.shape[0]
    if n == 0:
        raise DimensionMismatch("n = 0 is not allowed")
    if n % 2:
        raise OddDimension(f"gamma power needs even dimension, got {n}")
    if m is None:
        m = n // 2
    elif 2 * m != n:
        raise DimensionMismatch(f"m = {m} inconsistent with n = {n}")
    g = gamma(M)
    power = g
    for _ in range(m - 1):
        power = wedge(power, g)
    return power.coeffs.get((1 << n) - 1, 0.0)


def antisymmetric_part(M) -> np.ndarray:
    """M - M^T (unhalved, matching the gamma coefficient convention)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    return M - M.T


def _pfaffian_matchings(A: np.ndarray) -> float:
    """Signed sum over perfect matchings of {0..n-1}.

    The sign of the matching (i1 j1)(i2 j2)... with i1 < i2 < ... and
    ik < jk is the parity of the permutation (i1 j1 i2 j2 ...).
    """
    n = A.shape[0]

    def parity(perm):
        inv = 0
        for i in range(len(perm)):
            for j in range(i + 1, len(perm)):
                if perm[i] > perm[j]:
                    inv += 1
        return -1 if inv & 1 else 1

    def matchings(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for k, second in enumerate(rest):
            for tail in matchings(rest[:k] + rest[k + 1:]):
                yield [(first, second)] + tail

    total = 0.0
    for pairing in matchings(list(range(n))):
        perm = [idx for pair in pairing for idx in pair]
        prod = 1.0
        for i, j in pairing:
            prod *= A[i, j]
        total += parity(perm) * prod
    return total


def _pfaffian_expand(A: np.ndarray, rows: tuple[int, ...]) -> float:
    """Laplace-style expansion along the first remaining row, memoized."""
    cache: dict[tuple[int, ...], float] = {}

    def rec(active: tuple[int, ...]) -> float:
        if not active:
            return 1.0
        if active in cache:
            return cache[active]
        i0 = active[0]
        rest = active[1:]
        total = 0.0
        for pos, j in enumerate(rest):
            a = A[i0, j]
            if a != 0.0:
                sign = -1.0 if pos & 1 else 1.0
                total += sign * a * rec(rest[:pos] + rest[pos + 1:])
        cache[active] = total
        return total

    return rec(rows)


def pfaffian(A) -> float:
    """Pfaffian of an antisymmetric matrix of even dimension.

    Uses the explicit perfect-matchings sum for n <= 8 and the
    recursive first-row expansion beyond that; Pf(A)^2 = det(A).
    Raises NotAntisymmetric when ||A + A^T|| exceeds 1e-10 ||A||.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    n = A.shape[0]
    if n % 2:
        raise OddDimension(f"Pfaffian needs even dimension, got {n}")
    if n == 0:
        return 1.0
    scale = float(np.abs(A).max())
    if scale > 0 and float(np.abs(A + A.T).max()) > 1e-10 * scale:
        raise NotAntisymmetric("matrix is not antisymmetric within tolerance")
    if n <= 8:
        return _pfaffian_matchings(A)
    return _pfaffian_expand(A, tuple(range(n)))
