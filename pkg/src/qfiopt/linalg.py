"""Dense complex matrix kernel: Hermitian eigendecompositions, tensor-product
index gymnastics (partial trace/transpose, realignment, subsystem reordering)
and the matrix norms everything else is built on.

Conventions used throughout the package:

* matrices are dense ``numpy`` arrays of ``complex128``, row-major;
* for bipartite operators the first subsystem carries the slow (outer)
  index, i.e. the joint basis is ``|i⟩_1 ⊗ |j⟩_2  ->  row i*d2 + j``;
* eigenvalues are always returned in descending order.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10


class BipartiteDims(NamedTuple):
    """Subsystem dimensions (d1, d2) of a bipartite operator."""

    d1: int
    d2: int

    @property
    def total(self) -> int:
        return self.d1 * self.d2

    def check(self, dim: int) -> None:
        if self.d1 < 2 or self.d2 < 2:
            raise ValueError(f"bipartite dimensions must be >= 2, got {self}")
        if self.total != dim:
            raise ValueError(f"dimension mismatch: {self.d1}*{self.d2} != {dim}")


class SpectralData(NamedTuple):
    """Eigendecomposition A = U diag(w) U† with w sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitize(a: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate Hermiticity of ``a`` within ``tol`` and return (A + A†)/2.

    All Hermitian inputs pass through here on construction so that the
    eigensolvers downstream see exactly symmetric data.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian: max |A - A†| = {dev:.3e} > {tol:.1e}")
    return (a + a.conj().T) / 2


def hermitian_eig(a: np.ndarray) -> SpectralData:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises ``numpy.linalg.LinAlgError`` if the solver fails to converge.
    """
    w, u = np.linalg.eigh(np.asarray(a, dtype=complex))
    order = np.argsort(w)[::-1]
    return SpectralData(w[order].copy(), u[:, order].copy())


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with (A ⊗ B)_{(i,k),(j,l)} = A_ij B_kl."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(a: np.ndarray, dims: BipartiteDims, keep: int) -> np.ndarray:
    """Trace out one subsystem; ``keep`` is 0 (keep first) or 1 (keep second)."""
    d1, d2 = dims
    a = np.asarray(a)
    dims.check(a.shape[0])
    t = a.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.trace(t, axis1=1, axis2=3)
    if keep == 1:
        return np.trace(t, axis1=0, axis2=2)
    raise ValueError(f"keep must be 0 or 1, got {keep}")


def partial_transpose(a: np.ndarray, dims: BipartiteDims, subsystem: int = 0) -> np.ndarray:
    """Transpose the indices of one subsystem only.

    With A_{(i,j),(k,l)}, transposing subsystem 0 yields A_{(k,j),(i,l)}.
    Applying the same partial transpose twice returns the input exactly.
    """
    d1, d2 = dims
    a = np.asarray(a)
    dims.check(a.shape[0])
    t = a.reshape(d1, d2, d1, d2)
    if subsystem == 0:
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == 1:
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 0 or 1, got {subsystem}")
    return t.reshape(d1 * d2, d1 * d2).copy()


def realign(rho: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    """Realigned matrix R with R_{(i,k),(j,l)} = ρ_{(i,j),(k,l)}.

    R is d1² × d2²; for a product state ρ1 ⊗ ρ2 it equals the outer
    product vec(ρ1) vec(ρ2)ᵀ and therefore has rank one.
    """
    d1, d2 = dims
    rho = np.asarray(rho)
    dims.check(rho.shape[0])
    t = rho.reshape(d1, d2, d1, d2)  # indices (i, j, k, l)
    return t.transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2).copy()


def realign_adjoint(y: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    """Adjoint of ``realign``: the matrix C with C_{(i,j),(k,l)} = Y_{(i,k),(j,l)}.

    Satisfies Tr(realign(ρ)† Y) = Tr(ρ† C) for all ρ, which turns linear
    functionals of the realignment into ordinary operator inner products.
    """
    d1, d2 = dims
    y = np.asarray(y)
    if y.shape != (d1 * d1, d2 * d2):
        raise ValueError(f"expected shape {(d1 * d1, d2 * d2)}, got {y.shape}")
    t = y.reshape(d1, d1, d2, d2)  # indices (i, k, j, l)
    return t.transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2).copy()


def trace_norm(x: np.ndarray) -> float:
    """Sum of singular values of ``x`` (nuclear norm).

    Uses LAPACK SVD directly; the eigensolver-of-X†X route loses half the
    significant digits near zero singular values, which matters for the
    tight tolerances on realigned-matrix norms.
    """
    x = np.atleast_2d(np.asarray(x))
    try:
        s = np.linalg.svd(x, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise np.linalg.LinAlgError(f"SVD did not converge in trace_norm: {exc}") from exc
    return float(np.sum(s))


def hs_norm(x: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm √Tr(XX†)."""
    return float(np.linalg.norm(np.asarray(x)))


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise product; shapes must match exactly."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch in hadamard: {a.shape} vs {b.shape}")
    return a * b


def permute_subsystems(a: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator on ⊗_k C^{dims[k]}.

    ``perm`` lists the old subsystem indices in their new order; the result
    is P A P† for the corresponding basis permutation P, so the spectrum is
    unchanged.
    """
    dims = tuple(int(d) for d in dims)
    perm = tuple(int(p) for p in perm)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"perm must be a permutation of 0..{n - 1}, got {perm}")
    total = int(np.prod(dims))
    a = np.asarray(a)
    if a.shape != (total, total):
        raise ValueError(f"operator shape {a.shape} inconsistent with dims {dims}")
    t = a.reshape(dims + dims)
    axes = perm + tuple(n + p for p in perm)
    return t.transpose(axes).reshape(total, total).copy()


def reorder_to_bipartition(
    a: np.ndarray,
    dims4: Sequence[int],
    grouping: tuple[Sequence[int], Sequence[int]],
) -> np.ndarray:
    """Permute four subsystems so the two groups become contiguous.

    ``grouping=((0, 2), (1, 3))`` on a state ordered (A, B, A', B') yields
    the operator on the AA'|BB' cut, with the new first subsystem of
    dimension dims4[0]*dims4[2].
    """
    if len(dims4) != 4:
        raise ValueError(f"expected four subsystem dimensions, got {len(dims4)}")
    perm = tuple(grouping[0]) + tuple(grouping[1])
    return permute_subsystems(a, dims4, perm)
