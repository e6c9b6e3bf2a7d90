"""Factories for the benchmark states, the locally-depolarized separable set,
coherence-vector expansions, and density-matrix file I/O.

The JSON state format is::

    {"dims": [d1, d2],
     "matrix": [[[re, im], ...], ...],   # row-major, d1*d2 rows
     "label": "optional description"}

Loading re-validates Hermiticity (1e-10), unit trace (1e-10) and positivity
(min eigenvalue ≥ -1e-10) and names the violated axiom on failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .linalg import BipartiteDims, hermitize, kron, partial_trace, reorder_to_bipartition
from .metrology import DensityMatrix

# --------------------------------------------------------------------------
# benchmark states
# --------------------------------------------------------------------------


def max_entangled_ket(d: int) -> np.ndarray:
    """|Ψ_me⟩ = Σ_i |ii⟩ / √d."""
    psi = np.zeros(d * d, dtype=complex)
    psi[:: d + 1] = 1.0 / math.sqrt(d)
    return psi


def isotropic(p: float, d: int) -> DensityMatrix:
    """(1 − p) |Ψ_me⟩⟨Ψ_me| + p 1/d²: maximally entangled state in white noise."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"noise fraction p must lie in [0, 1], got {p}")
    if d < 2:
        raise ValidationError(f"local dimension must be >= 2, got {d}")
    psi = max_entangled_ket(d)
    mat = (1.0 - p) * np.outer(psi, psi.conj()) + p * np.eye(d * d) / d**2
    return DensityMatrix(mat, BipartiteDims(d, d))


def horodecki_3x3(a: float) -> DensityMatrix:
    """The one-parameter 3×3 bound entangled family, normalized by 1/(8a+1).

    PPT for every a in (0, 1) yet entangled; a standard stress test for
    entanglement-detection and metrology algorithms.
    """
    if not 0.0 < a < 1.0:
        raise ValidationError(f"parameter a must lie in (0, 1), got {a}")
    b = (1.0 + a) / 2.0
    c = math.sqrt(1.0 - a * a) / 2.0
    m = np.zeros((9, 9))
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = a
    for i in (1, 2, 3, 5, 7):
        m[i, i] = a
    m[6, 6] = b
    m[8, 8] = b
    m[6, 8] = m[8, 6] = c
    return DensityMatrix(m / (8.0 * a + 1.0), BipartiteDims(3, 3))


def upb_tiles_3x3() -> DensityMatrix:
    """Bound entangled 3×3 state from the Tiles unextendible product basis.

    ρ = (1 − Σ_i |ψ_i⟩⟨ψ_i|) / 4 with the five tile vectors; rank 4 and PPT.
    """
    e = np.eye(3)
    s2 = 1.0 / math.sqrt(2.0)
    ones = (e[0] + e[1] + e[2]) / math.sqrt(3.0)
    tiles = [
        kron_vec(e[0], (e[0] - e[1]) * s2),
        kron_vec(e[2], (e[1] - e[2]) * s2),
        kron_vec((e[0] - e[1]) * s2, e[2]),
        kron_vec((e[1] - e[2]) * s2, e[0]),
        kron_vec(ones, ones),
    ]
    proj = sum(np.outer(v, v.conj()) for v in tiles)
    return DensityMatrix((np.eye(9) - proj) / 4.0, BipartiteDims(3, 3))


def kron_vec(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))


def bell_kets() -> dict[str, np.ndarray]:
    """The four Bell vectors with the convention Φ± = (|00⟩ ± |11⟩)/√2,
    Ψ± = (|01⟩ ± |10⟩)/√2."""
    s2 = 1.0 / math.sqrt(2.0)
    z = np.zeros(4, dtype=complex)
    phi_p, phi_m, psi_p, psi_m = z.copy(), z.copy(), z.copy(), z.copy()
    phi_p[[0, 3]] = s2, s2
    phi_m[[0, 3]] = s2, -s2
    psi_p[[1, 2]] = s2, s2
    psi_m[[1, 2]] = s2, -s2
    return {"phi+": phi_p, "phi-": phi_m, "psi+": psi_p, "psi-": psi_m}


def ccnr_bes_4x4() -> DensityMatrix:
    """The 4×4 bound entangled state maximizing the realignment trace norm.

    Built as Σ_i p_i |Ψ_i⟩⟨Ψ_i|_AB ⊗ ρ^(i)_A'B' with Bell-state weights
    (1/6, 1/6, 1/6, 1/2) on (Ψ+, Ψ-, Φ+, Φ-), then regrouped onto the
    AA'|BB' cut. It is PPT with ‖R(ρ)‖_tr = 3/2, yet metrologically useless.
    """
    bells = bell_kets()
    order = ["psi+", "psi-", "phi+", "phi-"]
    probs = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 2.0]
    projs = {k: np.outer(v, v.conj()) for k, v in bells.items()}
    blocks = [
        projs["psi+"],
        projs["psi-"],
        projs["phi+"],
        (np.eye(4) - projs["phi-"]) / 3.0,
    ]
    rho = sum(p * kron(projs[name], blk) for p, name, blk in zip(probs, order, blocks))
    # ordering so far is (A, B, A', B'); regroup as (A, A')(B, B')
    rho = reorder_to_bipartition(rho, (2, 2, 2, 2), ((0, 2), (1, 3)))
    return DensityMatrix(rho, BipartiteDims(4, 4))


BUILTIN_STATES = {
    "isotropic": isotropic,
    "horodecki": horodecki_3x3,
    "upb-tiles": upb_tiles_3x3,
    "ccnr-bes-4x4": ccnr_bes_4x4,
}


def builtin_state(spec: str) -> DensityMatrix:
    """Resolve a ``name:param:param`` descriptor, e.g. ``isotropic:0.1:3``."""
    name, *params = spec.split(":")
    if name == "isotropic":
        if len(params) != 2:
            raise ValidationError("isotropic takes two parameters: isotropic:<p>:<d>")
        return isotropic(float(params[0]), int(params[1]))
    if name == "horodecki":
        if len(params) != 1:
            raise ValidationError("horodecki takes one parameter: horodecki:<a>")
        return horodecki_3x3(float(params[0]))
    if name == "upb-tiles":
        return upb_tiles_3x3()
    if name == "ccnr-bes-4x4":
        return ccnr_bes_4x4()
    raise ValidationError(
        f"unknown built-in state {name!r}; available: {sorted(BUILTIN_STATES)}"
    )


# --------------------------------------------------------------------------
# the locally-depolarized separable set  p (ρ1 ⊗ 1/d2) + (1-p)(1/d1 ⊗ ρ2)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpecialSeparableDecomposition:
    """Witness of membership: ρ = p (ρ1 ⊗ 1/d2) + (1 − p)(1/d1 ⊗ ρ2)."""

    p: float
    rho1: DensityMatrix
    rho2: DensityMatrix
    p_bounds: tuple[float, float]


def special_separable_compose(
    rho1: DensityMatrix, rho2: DensityMatrix, p: float, dims: BipartiteDims | None = None
) -> DensityMatrix:
    """Assemble p (ρ1 ⊗ 1/d2) + (1 − p)(1/d1 ⊗ ρ2)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"mixing weight p must lie in [0, 1], got {p}")
    d1 = rho1.dim
    d2 = rho2.dim
    if dims is not None and (dims.d1 != d1 or dims.d2 != d2):
        raise ValidationError(f"dims {dims} inconsistent with factors ({d1}, {d2})")
    mat = p * kron(rho1.mat, np.eye(d2) / d2) + (1.0 - p) * kron(np.eye(d1) / d1, rho2.mat)
    return DensityMatrix(mat, BipartiteDims(d1, d2))


def special_separable_membership(
    rho: DensityMatrix, residual_tol: float = 1e-9
) -> SpecialSeparableDecomposition | None:
    """Decide membership in the locally-depolarized set and recover a witness.

    The reduced states pin the admissible mixing weights to the interval
    [1 − d1 λ_min(ρ1^red), d2 λ_min(ρ2^red)]; one admissible p suffices, so
    the midpoint is tested (an endpoint when a reduced state is rank
    deficient forces it). Returns None for non-members.
    """
    dims = rho.require_dims()
    d1, d2 = dims
    red1 = partial_trace(rho.mat, dims, keep=0)
    red2 = partial_trace(rho.mat, dims, keep=1)
    lmin1 = float(np.linalg.eigvalsh(hermitize(red1))[0])
    lmin2 = float(np.linalg.eigvalsh(hermitize(red2))[0])
    low = 1.0 - d1 * lmin1
    high = d2 * lmin2
    if low > high + 1e-12:
        return None
    p = min(max((low + high) / 2.0, 0.0), 1.0)

    eps = 1e-12
    if p < eps:
        rho1 = np.eye(d1) / d1  # p = 0: the first factor is arbitrary
        rho2 = red2
    elif 1.0 - p < eps:
        rho1 = red1
        rho2 = np.eye(d2) / d2
    else:
        rho1 = (red1 - (1.0 - p) / d1 * np.eye(d1)) / p
        rho2 = (red2 - p / d2 * np.eye(d2)) / (1.0 - p)

    try:
        dm1 = DensityMatrix(_clip_psd(rho1))
        dm2 = DensityMatrix(_clip_psd(rho2))
    except ValidationError:
        return None
    recomposed = special_separable_compose(dm1, dm2, p)
    if np.max(np.abs(recomposed.mat - rho.mat)) > residual_tol:
        return None
    return SpecialSeparableDecomposition(p, dm1, dm2, (low, high))


def _clip_psd(mat: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Zero out eigenvalues in [-tol, 0) that stem from recovery round-off."""
    mat = hermitize(mat, tol=1e-8)
    w, u = np.linalg.eigh(mat)
    if w[0] < -tol:
        return mat  # genuinely negative: let DensityMatrix reject it
    w = np.maximum(w, 0.0)
    return (u * w) @ u.conj().T


# --------------------------------------------------------------------------
# coherence vectors over SU(d) generator bases
# --------------------------------------------------------------------------


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann generators, normalized to Tr(G²) = 2.

    Ordered as symmetric off-diagonal, antisymmetric off-diagonal, diagonal;
    for d = 2 this is exactly (σx, σy, σz).
    """
    sym, antisym, diag = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            g = np.zeros((d, d), dtype=complex)
            g[j, k] = g[k, j] = 1.0
            sym.append(g)
            g = np.zeros((d, d), dtype=complex)
            g[j, k] = -1j
            g[k, j] = 1j
            antisym.append(g)
    for l in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.diag_indices(d)] = 0.0
        for j in range(l):
            g[j, j] = 1.0
        g[l, l] = -float(l)
        diag.append(g * math.sqrt(2.0 / (l * (l + 1))))
    return sym + antisym + diag


@dataclass(frozen=True)
class CoherenceVector:
    """Generator-basis expansion of a bipartite state.

    ``local1`` and ``local2`` are the reduced-state Bloch components
    ⟨G⊗1⟩/d2 and ⟨1⊗G⟩/d1; ``corr`` holds the correlation block
    K_kl = ⟨G1^(k) ⊗ G2^(l)⟩.
    """

    local1: np.ndarray
    local2: np.ndarray
    corr: np.ndarray
    dims: BipartiteDims

    def reconstruct(self) -> np.ndarray:
        d1, d2 = self.dims
        g1 = gell_mann_basis(d1)
        g2 = gell_mann_basis(d2)
        mat = np.eye(d1 * d2, dtype=complex) / (d1 * d2)
        for k, g in enumerate(g1):
            mat += 0.5 * self.local1[k] * kron(g, np.eye(d2))
        for l, g in enumerate(g2):
            mat += 0.5 * self.local2[l] * kron(np.eye(d1), g)
        for k, ga in enumerate(g1):
            for l, gb in enumerate(g2):
                mat += 0.25 * self.corr[k, l] * kron(ga, gb)
        return mat

    def nonzero_count(self, tol: float = 1e-10) -> int:
        return int(
            np.sum(np.abs(self.local1) > tol)
            + np.sum(np.abs(self.local2) > tol)
            + np.sum(np.abs(self.corr) > tol)
        )


def coherence_vector(rho: DensityMatrix) -> CoherenceVector:
    """Expansion coefficients of ϱ against the local generator bases."""
    dims = rho.require_dims()
    d1, d2 = dims
    g1 = gell_mann_basis(d1)
    g2 = gell_mann_basis(d2)
    red1 = partial_trace(rho.mat, dims, keep=0)
    red2 = partial_trace(rho.mat, dims, keep=1)
    local1 = np.array([float(np.trace(red1 @ g).real) for g in g1])
    local2 = np.array([float(np.trace(red2 @ g).real) for g in g2])
    corr = np.empty((len(g1), len(g2)))
    for k, ga in enumerate(g1):
        for l, gb in enumerate(g2):
            corr[k, l] = float(np.trace(rho.mat @ kron(ga, gb)).real)
    return CoherenceVector(local1, local2, corr, dims)


# --------------------------------------------------------------------------
# file I/O
# --------------------------------------------------------------------------


def _matrix_to_json(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def _matrix_from_json(rows: list) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix entries: {exc}") from exc


def save_state(rho: DensityMatrix, path: str | Path, label: str | None = None) -> None:
    doc = {"dims": list(rho.require_dims()), "matrix": _matrix_to_json(rho.mat)}
    if label is not None:
        doc["label"] = label
    Path(path).write_text(json.dumps(doc))


def load_state(path: str | Path) -> DensityMatrix:
    """Load and validate a density matrix; names the violated axiom on failure."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read state file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "dims" not in doc or "matrix" not in doc:
        raise ValidationError(f"state file {path} must carry 'dims' and 'matrix' fields")
    dims = doc["dims"]
    if not (isinstance(dims, list) and len(dims) == 2):
        raise ValidationError(f"'dims' must be a two-element list, got {dims!r}")
    dims = BipartiteDims(int(dims[0]), int(dims[1]))
    mat = _matrix_from_json(doc["matrix"])
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {mat.shape}")
    if mat.shape[0] != dims.total:
        raise ValidationError(
            f"dimension mismatch: dims {list(dims)} imply {dims.total}, matrix is {mat.shape[0]}x{mat.shape[0]}"
        )
    try:
        hermitize(mat)
    except ValueError as exc:
        raise ValidationError(f"Hermiticity violation in {path}: {exc}") from exc
    return DensityMatrix(mat, dims)


def save_operator(h: np.ndarray, path: str | Path, label: str | None = None) -> None:
    """Write a Hermitian operator in the same JSON layout (no state axioms)."""
    doc = {"matrix": _matrix_to_json(hermitize(h))}
    if label is not None:
        doc["label"] = label
    Path(path).write_text(json.dumps(doc))


def load_operator(path: str | Path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read operator file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise ValidationError(f"operator file {path} must carry a 'matrix' field")
    mat = _matrix_from_json(doc["matrix"])
    try:
        return hermitize(mat)
    except ValueError as exc:
        raise ValidationError(f"Hermiticity violation in {path}: {exc}") from exc
