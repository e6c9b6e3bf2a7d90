"""Quantum-metrology formulas built on the density-matrix eigenbasis.

The quantum Fisher information of a state ϱ = Σ_k λ_k |k⟩⟨k| evolving under
exp(-iHθ) is

    F_Q[ϱ, H] = Σ_kl Q_kl² |⟨k|H|l⟩|²,   Q_kl = √(2 (λ_k − λ_l)² / (λ_k + λ_l)),

and everything here — the two-operator form, the Fisher matrix, the symmetric
logarithmic derivative, the Wigner–Yanase skew information — is evaluated
through that eigenbasis route. Eigenvalue pairs whose sum falls below a
relative rank threshold contribute nothing and are dropped exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UninformativeMeasurementError, ValidationError
from .linalg import (
    BipartiteDims,
    SpectralData,
    hermitian_eig,
    hermitize,
    kron,
)

# Eigenvalues of ϱ below RANK_RTOL * λ_max are treated as exactly zero.
RANK_RTOL = 1e-12

TRACE_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator with cached spectral data.

    ``dims`` is optional; it is required by the bipartite operations
    (partial transpose, realignment, local-Hamiltonian optimization).
    The cached eigendecomposition is immutable after construction and safe
    to share across threads.
    """

    mat: np.ndarray
    dims: BipartiteDims | None = None
    spectral: SpectralData = field(init=False, repr=False)

    def __post_init__(self):
        mat = hermitize(self.mat)
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace violation: Tr(ϱ) = {tr!r}, expected 1")
        spectral = hermitian_eig(mat)
        if spectral.eigenvalues[-1] < -PSD_TOL:
            raise ValidationError(
                f"positivity violation: min eigenvalue = {spectral.eigenvalues[-1]:.3e}"
            )
        if self.dims is not None:
            dims = BipartiteDims(*self.dims)
            dims.check(mat.shape[0])
            object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "spectral", spectral)
        mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def require_dims(self) -> BipartiteDims:
        if self.dims is None:
            raise ValidationError("operation requires bipartite dimensions, none were given")
        return self.dims

    def clamped_eigenvalues(self) -> np.ndarray:
        """Spectrum with sub-threshold (and slightly negative) values zeroed."""
        lam = self.spectral.eigenvalues.copy()
        lam[lam < RANK_RTOL * max(lam[0], 0.0)] = 0.0
        return lam

    def to_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        """Matrix elements ⟨k|A|l⟩ of an operator in the cached eigenbasis."""
        u = self.spectral.eigenvectors
        return u.conj().T @ np.asarray(a) @ u

    def from_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        u = self.spectral.eigenvectors
        return u @ np.asarray(a) @ u.conj().T


@dataclass(frozen=True)
class LocalHamiltonian:
    """Pair (H1, H2) standing for H1 ⊗ 1 + 1 ⊗ H2, with eigenvalue caps.

    ``caps = (c1, c2)`` bound the spectra: a cap-feasible part satisfies
    -c_n ≤ σ(H_n) ≤ c_n. The see-saw iterates always sit on the boundary
    where every eigenvalue is ±c_n.
    """

    h1: np.ndarray
    h2: np.ndarray
    caps: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "h1", hermitize(self.h1))
        object.__setattr__(self, "h2", hermitize(self.h2))
        c1, c2 = (float(c) for c in self.caps)
        if c1 <= 0 or c2 <= 0:
            raise ValidationError(f"caps must be positive, got {self.caps}")
        object.__setattr__(self, "caps", (c1, c2))

    @property
    def dims(self) -> BipartiteDims:
        return BipartiteDims(self.h1.shape[0], self.h2.shape[0])

    def assemble(self) -> np.ndarray:
        """The joint-space operator H1 ⊗ 1 + 1 ⊗ H2."""
        d1, d2 = self.dims
        return kron(self.h1, np.eye(d2)) + kron(np.eye(d1), self.h2)

    def is_cap_feasible(self, tol: float = 1e-9) -> bool:
        for h, c in ((self.h1, self.caps[0]), (self.h2, self.caps[1])):
            w = np.linalg.eigvalsh(h)
            if w[0] < -c - tol or w[-1] > c + tol:
                return False
        return True


@dataclass(frozen=True)
class GainReport:
    """Result of a metrological-gain maximization."""

    value: float
    qfi: float
    sep_bound: float
    optimal_hamiltonian: LocalHamiltonian
    theta: float
    diagnostics: dict


def q_matrix(rho: DensityMatrix) -> np.ndarray:
    """Coefficient matrix Q_kl = √(2 (λ_k − λ_l)² / (λ_k + λ_l)).

    Entries whose eigenvalue-pair sum falls below the rank threshold are
    exactly zero, as is the whole diagonal.
    """
    lam = rho.clamped_eigenvalues()
    s = lam[:, None] + lam[None, :]
    d = lam[:, None] - lam[None, :]
    q = np.zeros_like(s)
    mask = s > RANK_RTOL * max(lam[0], 0.0)
    q[mask] = np.sqrt(2.0 * d[mask] ** 2 / s[mask])
    return q


def wy_coefficient_matrix(rho: DensityMatrix) -> np.ndarray:
    """Coefficients C_kl = (√λ_k − √λ_l)²/2 of the skew-information sum.

    Plays the same role for I_ϱ that Q∘Q plays for F_Q, so the see-saw can
    swap it in without touching anything else.
    """
    r = np.sqrt(rho.clamped_eigenvalues())
    return (r[:, None] - r[None, :]) ** 2 / 2.0


def _check_dim(rho: DensityMatrix, a: np.ndarray, name: str = "operator") -> np.ndarray:
    a = np.asarray(a)
    if a.shape != rho.mat.shape:
        raise ValidationError(
            f"dimension mismatch: {name} has shape {a.shape}, state has {rho.mat.shape}"
        )
    return a


def qfi(rho: DensityMatrix, h: np.ndarray) -> float:
    """Quantum Fisher information F_Q[ϱ, H]."""
    ht = rho.to_eigenbasis(_check_dim(rho, h, "Hamiltonian"))
    q = q_matrix(rho)
    return float(np.sum(q * q * np.abs(ht) ** 2))


def qfi_two(rho: DensityMatrix, a: np.ndarray, b: np.ndarray) -> float:
    """Two-operator form F_Q[ϱ, A, B] = Σ Q_kl² (A_kl^r B_kl^r + A_kl^i B_kl^i).

    Symmetric and bilinear in (A, B); the diagonal reproduces ``qfi``.
    """
    at = rho.to_eigenbasis(_check_dim(rho, a, "A"))
    bt = rho.to_eigenbasis(_check_dim(rho, b, "B"))
    q = q_matrix(rho)
    return float(np.sum(q * q * (at.real * bt.real + at.imag * bt.imag)))


def fisher_matrix(rho: DensityMatrix, hams: Sequence[np.ndarray]) -> np.ndarray:
    """Fisher matrix F_mn = F_Q[ϱ, H^(m), H^(n)] for a list of generators."""
    ts = [rho.to_eigenbasis(_check_dim(rho, h)) for h in hams]
    q2 = q_matrix(rho) ** 2
    n = len(ts)
    f = np.empty((n, n))
    for m in range(n):
        for k in range(m, n):
            val = float(np.sum(q2 * (ts[m].real * ts[k].real + ts[m].imag * ts[k].imag)))
            f[m, k] = f[k, m] = val
    return f


def sld(rho: DensityMatrix, h: np.ndarray) -> np.ndarray:
    """Symmetric logarithmic derivative M = 2i Σ (λ_k−λ_l)/(λ_k+λ_l) |k⟩⟨l| H_kl."""
    ht = rho.to_eigenbasis(_check_dim(rho, h, "Hamiltonian"))
    lam = rho.clamped_eigenvalues()
    s = lam[:, None] + lam[None, :]
    d = lam[:, None] - lam[None, :]
    coeff = np.zeros_like(s)
    mask = s > RANK_RTOL * max(lam[0], 0.0)
    coeff[mask] = d[mask] / s[mask]
    m = 2j * coeff * ht
    return hermitize(rho.from_eigenbasis(m), tol=1e-8)


def expval(rho: DensityMatrix, a: np.ndarray) -> float:
    """⟨A⟩ = Tr(ϱA) for Hermitian A."""
    return float(np.trace(rho.mat @ np.asarray(a)).real)


def variance(rho: DensityMatrix, a: np.ndarray) -> float:
    a = np.asarray(a)
    return expval(rho, a @ a) - expval(rho, a) ** 2


def error_propagation_variance(rho: DensityMatrix, m: np.ndarray, h: np.ndarray) -> float:
    """(ΔM)² / ⟨i[M, H]⟩², the phase-estimation variance of measuring M.

    Raises ``UninformativeMeasurementError`` when the commutator expectation
    vanishes, since the measurement then carries no phase signal at all.
    """
    m = _check_dim(rho, m, "M")
    h = _check_dim(rho, h, "H")
    comm = expval(rho, 1j * (m @ h - h @ m))
    if comm**2 <= 1e-20:
        raise UninformativeMeasurementError(
            f"uninformative measurement: ⟨i[M,H]⟩² = {comm**2:.3e} vanishes"
        )
    return variance(rho, m) / comm**2


def delta_seminorm(h: np.ndarray) -> float:
    """Spectral spread δ(H) = σ_max − σ_min; zero exactly on multiples of 1."""
    w = np.linalg.eigvalsh(hermitize(h))
    return float(w[-1] - w[0])


def fq_sep(ham: LocalHamiltonian) -> float:
    """Largest QFI separable states reach for H1 ⊗ 1 + 1 ⊗ H2: δ²(H1) + δ²(H2)."""
    return delta_seminorm(ham.h1) ** 2 + delta_seminorm(ham.h2) ** 2


def gain_for(rho: DensityMatrix, ham: LocalHamiltonian) -> float:
    """Metrological gain g = F_Q[ϱ, H] / F_sep(H) for a fixed local Hamiltonian."""
    sep = fq_sep(ham)
    if sep <= 1e-12:
        raise ValidationError(
            "metrologically trivial Hamiltonian: both parts are multiples of the identity"
        )
    return qfi(rho, ham.assemble()) / sep


def wy_skew(rho: DensityMatrix, h: np.ndarray) -> float:
    """Wigner–Yanase skew information Tr(H²ϱ) − Tr(H√ϱ H√ϱ).

    Evaluated as Σ_kl (√λ_k − √λ_l)²/2 |H_kl|² in the eigenbasis; satisfies
    F_Q ≥ 4 I_ϱ.
    """
    ht = rho.to_eigenbasis(_check_dim(rho, h, "Hamiltonian"))
    return float(np.sum(wy_coefficient_matrix(rho) * np.abs(ht) ** 2))
