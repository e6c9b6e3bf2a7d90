"""Standard-form semidefinite programming layer.

A :class:`ConicProgram` is

    max / min   c · x
    subject to  A x = b,   x ∈ K,

where x stacks the coordinates of an ordered list of blocks: PSD blocks in
scaled-svec form (upper triangle, column-major, off-diagonals times √2),
nonnegative and free blocks as plain vectors. ``solve`` lowers the program to
the Clarabel interior-point solver; correctness is defined by the returned
primal/dual pair and gap, not by the algorithm.

On top of that sit the domain programs: linear optimization over (PPT)
density matrices via the real embedding of complex Hermitian variables, and
the level-1 moment relaxation that upper-bounds the cap-constrained quantum
Fisher information maximization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from io import StringIO

import numpy as np
import scipy.sparse as sp

import clarabel

from .errors import InfeasibleError, NumericalError, ValidationError
from .linalg import BipartiteDims, hermitize, kron, partial_transpose
from .metrology import DensityMatrix, LocalHamiltonian, q_matrix

DEFAULT_TOL = 1e-8

_SQRT2 = math.sqrt(2.0)


# --------------------------------------------------------------------------
# scaled svec packing (matches the solver's PSD-triangle convention)
# --------------------------------------------------------------------------


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


@lru_cache(maxsize=64)
def _svec_indices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(row, col, scale) arrays of the upper triangle in column-major order."""
    rows = np.concatenate([np.arange(j + 1) for j in range(n)])
    cols = np.repeat(np.arange(n), np.arange(1, n + 1))
    scale = np.where(rows == cols, 1.0, _SQRT2)
    return rows, cols, scale


def svec(a: np.ndarray) -> np.ndarray:
    """Pack a real symmetric matrix so that svec(A)·svec(B) = Tr(AB)."""
    a = np.asarray(a, dtype=float)
    rows, cols, scale = _svec_indices(a.shape[0])
    return a[rows, cols] * scale


def smat(x: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    rows, cols, scale = _svec_indices(n)
    a = np.zeros((n, n))
    a[rows, cols] = np.asarray(x) / scale
    a[cols, rows] = a[rows, cols]
    return a


# --------------------------------------------------------------------------
# program and solution containers
# --------------------------------------------------------------------------

BLOCK_KINDS = ("psd", "nonneg", "free")


@dataclass(frozen=True)
class Block:
    """One cone block; ``size`` is the matrix side for psd blocks."""

    kind: str
    size: int
    offset: int

    @property
    def num_coords(self) -> int:
        return svec_dim(self.size) if self.kind == "psd" else self.size


@dataclass(frozen=True)
class ConicProgram:
    blocks: tuple[Block, ...]
    c: np.ndarray
    a_rows: np.ndarray
    a_cols: np.ndarray
    a_vals: np.ndarray
    b: np.ndarray
    maximize: bool = True

    def __post_init__(self):
        for blk in self.blocks:
            if blk.kind not in BLOCK_KINDS:
                raise ValidationError(f"unknown block kind {blk.kind!r}")
        total = self.num_coords
        if len(self.c) != total:
            raise ValidationError(f"objective length {len(self.c)} != coordinates {total}")
        if not (len(self.a_rows) == len(self.a_cols) == len(self.a_vals)):
            raise ValidationError("constraint triplet arrays must have equal length")
        if len(self.a_rows) and (
            self.a_rows.max() >= len(self.b) or self.a_cols.max() >= total
        ):
            raise ValidationError("constraint triplet indices out of range")

    @property
    def num_coords(self) -> int:
        return sum(blk.num_coords for blk in self.blocks)

    @property
    def num_constraints(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    primal_objective: float
    dual_objective: float
    status: str
    gap: float
    primal_residual: float
    program: ConicProgram = field(repr=False)

    def block_value(self, index: int) -> np.ndarray:
        """Primal value of block ``index``: a matrix for psd, a vector otherwise."""
        blk = self.program.blocks[index]
        seg = self.x[blk.offset : blk.offset + blk.num_coords]
        return smat(seg, blk.size) if blk.kind == "psd" else seg.copy()


class ProgramBuilder:
    """Accumulates blocks, equality constraints and an objective."""

    def __init__(self, maximize: bool = True):
        self.blocks: list[Block] = []
        self._obj: dict[int, float] = {}
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._rhs: list[float] = []
        self.maximize = maximize

    def add_block(self, kind: str, size: int) -> Block:
        offset = sum(blk.num_coords for blk in self.blocks)
        blk = Block(kind, size, offset)
        self.blocks.append(blk)
        return blk

    def _coeffs(self, block: Block, weight: np.ndarray) -> np.ndarray:
        if block.kind == "psd":
            return svec(weight)
        w = np.asarray(weight, dtype=float)
        if w.shape != (block.size,):
            raise ValidationError(f"weight shape {w.shape} != block size {block.size}")
        return w

    def set_objective(self, block: Block, weight: np.ndarray) -> None:
        """Add Tr(W X) (psd block, W symmetric) or w·x (vector block)."""
        coeffs = self._coeffs(block, weight)
        for i in np.nonzero(coeffs)[0]:
            key = block.offset + int(i)
            self._obj[key] = self._obj.get(key, 0.0) + coeffs[i]

    def add_constraint(self, terms: list[tuple[Block, np.ndarray]], rhs: float) -> None:
        """Add Σ_i Tr(W_i X_i) (or w_i·x_i) = rhs across the listed blocks."""
        row = len(self._rhs)
        for block, weight in terms:
            coeffs = self._coeffs(block, weight)
            nz = np.nonzero(coeffs)[0]
            self._rows.extend([row] * len(nz))
            self._cols.extend((block.offset + nz).tolist())
            self._vals.extend(coeffs[nz].tolist())
        self._rhs.append(float(rhs))

    def add_triplets(self, rows, cols, vals, rhs) -> None:
        """Append pre-assembled constraint rows (raw coordinate indices)."""
        base = len(self._rhs)
        self._rows.extend(int(base + r) for r in rows)
        self._cols.extend(int(c) for c in cols)
        self._vals.extend(float(v) for v in vals)
        self._rhs.extend(float(v) for v in rhs)

    def build(self) -> ConicProgram:
        total = sum(blk.num_coords for blk in self.blocks)
        c = np.zeros(total)
        for i, v in self._obj.items():
            c[i] = v
        return ConicProgram(
            tuple(self.blocks),
            c,
            np.asarray(self._rows, dtype=np.int64),
            np.asarray(self._cols, dtype=np.int64),
            np.asarray(self._vals, dtype=float),
            np.asarray(self._rhs, dtype=float),
            self.maximize,
        )


# --------------------------------------------------------------------------
# the solver lowering
# --------------------------------------------------------------------------

_STATUS_MAP = {
    "Solved": "OPTIMAL",
    "PrimalInfeasible": "INFEASIBLE",
    "AlmostPrimalInfeasible": "INFEASIBLE",
    "DualInfeasible": "UNBOUNDED",
    "AlmostDualInfeasible": "UNBOUNDED",
}


def solve(program: ConicProgram, tol: float = DEFAULT_TOL) -> ConicSolution:
    """Solve a conic program; statuses other than OPTIMAL are reported, not raised."""
    n = program.num_coords
    m = program.num_constraints
    a_eq = sp.csc_matrix((program.a_vals, (program.a_rows, program.a_cols)), shape=(m, n))
    cone_rows = []
    cones: list = [clarabel.ZeroConeT(m)]
    for blk in program.blocks:
        if blk.kind == "free":
            continue
        cone_rows.append(np.arange(blk.offset, blk.offset + blk.num_coords))
        if blk.kind == "psd":
            cones.append(clarabel.PSDTriangleConeT(blk.size))
        else:
            cones.append(clarabel.NonnegativeConeT(blk.size))
    if cone_rows:
        idx = np.concatenate(cone_rows)
        eye = sp.csc_matrix(
            (-np.ones(len(idx)), (np.arange(len(idx)), idx)), shape=(len(idx), n)
        )
        a_full = sp.vstack([a_eq, eye]).tocsc()
        b_full = np.concatenate([program.b, np.zeros(len(idx))])
    else:
        a_full, b_full = a_eq, program.b.copy()

    q = -program.c if program.maximize else program.c.copy()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), q, a_full, b_full, cones, settings)
    sol = solver.solve()

    status = _STATUS_MAP.get(str(sol.status), "NUMERICAL_LIMIT")
    sign = -1.0 if program.maximize else 1.0
    pobj = sign * float(sol.obj_val)
    dobj = sign * float(sol.obj_val_dual)
    return ConicSolution(
        x=np.asarray(sol.x),
        y=np.asarray(sol.z)[:m],
        primal_objective=pobj,
        dual_objective=dobj,
        status=status,
        gap=abs(pobj - dobj),
        primal_residual=float(sol.r_prim),
        program=program,
    )


def require_optimal(sol: ConicSolution, context: str) -> ConicSolution:
    if sol.status == "INFEASIBLE":
        raise InfeasibleError(f"{context}: conic program infeasible")
    if sol.status != "OPTIMAL":
        raise NumericalError(f"{context}: solver status {sol.status}")
    return sol


def dump_program(program: ConicProgram) -> str:
    """Sparse-triplet text dump for cross-checking against external solvers.

    One line per nonzero. Format: ``obj <block> <row> <col> <value>`` for the
    objective and ``con <k> <block> <row> <col> <value>`` / ``rhs <k> <value>``
    for constraint k. Matrix indices refer to the block's symmetric matrix
    (vector blocks use col 0); values are actual matrix entries, unscaled.
    """
    out = StringIO()
    kinds = " ".join(f"{blk.kind}:{blk.size}" for blk in program.blocks)
    out.write(f"conicprogram {'max' if program.maximize else 'min'} blocks {kinds}\n")

    def locate(col: int) -> tuple[int, int, int, float]:
        for bi, blk in enumerate(program.blocks):
            if blk.offset <= col < blk.offset + blk.num_coords:
                local = col - blk.offset
                if blk.kind != "psd":
                    return bi, local, 0, 1.0
                rows, cols, scale = _svec_indices(blk.size)
                return bi, int(rows[local]), int(cols[local]), float(scale[local])
        raise ValueError(col)

    for col in np.nonzero(program.c)[0]:
        bi, r, cc, scale = locate(int(col))
        out.write(f"obj {bi} {r} {cc} {program.c[col] / scale!r}\n")
    for k in range(len(program.a_rows)):
        bi, r, cc, scale = locate(int(program.a_cols[k]))
        out.write(f"con {program.a_rows[k]} {bi} {r} {cc} {program.a_vals[k] / scale!r}\n")
    for k, rhs in enumerate(program.b):
        out.write(f"rhs {k} {rhs!r}\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# complex-to-real embedding
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexEmbedding:
    """Real embedding H = X + iY  ↦  [[X, -Y], [Y, X]] of Hermitian matrices.

    Doubles every eigenvalue's multiplicity, so A ⪰ 0 iff embed(A) ⪰ 0;
    traces and Hilbert-Schmidt inner products pick up ``factor`` = 2.
    """

    n: int
    factor: float = 2.0

    def embed(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        return np.block([[h.real, -h.imag], [h.imag, h.real]])

    def extract(self, e: np.ndarray) -> np.ndarray:
        """Complex matrix from a (possibly unstructured) symmetric embedding.

        Averages over the embedding's symmetry group, so any feasible
        symmetric point maps to a Hermitian matrix without losing positivity;
        on exact embeddings this inverts :meth:`embed`.
        """
        n = self.n
        a, b = e[:n, :n], e[:n, n:]
        c, d = e[n:, :n], e[n:, n:]
        x = (a + a.T + d + d.T) / 4.0
        y = (c - c.T - b + b.T) / 4.0
        return x + 1j * y


def embed_complex_psd(n: int) -> ComplexEmbedding:
    return ComplexEmbedding(n)


# --------------------------------------------------------------------------
# linear optimization over (PPT) density matrices
# --------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _ppt_skeleton(d1: int, d2: int):
    """Constraint skeleton shared by every PPT-restricted linear program.

    Variables: E1 = embed(ρ), E2 = embed(ρ^T1), tied coordinate by coordinate
    through the linear map svec(E2) = L svec(E1), plus Tr(E1) = 2.
    """
    dims = BipartiteDims(d1, d2)
    n = d1 * d2
    emb = embed_complex_psd(n)
    nn = 2 * n
    sdim = svec_dim(nn)

    builder = ProgramBuilder(maximize=True)
    e1 = builder.add_block("psd", nn)
    e2 = builder.add_block("psd", nn)
    builder.add_constraint([(e1, np.eye(nn) / 2.0)], 1.0)  # Tr ρ = 1

    basis = np.zeros(sdim)
    rows, cols, vals, rhs = [], [], [], []
    for j in range(sdim):
        basis[j] = 1.0
        image = emb.embed(partial_transpose(emb.extract(smat(basis, nn)), dims, 0))
        basis[j] = 0.0
        line = svec(image)
        nz = np.nonzero(np.abs(line) > 1e-14)[0]
        rows.append(j)
        cols.append(e2.offset + j)
        vals.append(1.0)
        rows.extend([j] * len(nz))
        cols.extend((e1.offset + nz).tolist())
        vals.extend((-line[nz]).tolist())
        rhs.append(0.0)
    builder.add_triplets(rows, cols, vals, rhs)
    program = builder.build()
    return program, emb


def linear_over_ppt(
    c_op: np.ndarray, dims: BipartiteDims, tol: float = DEFAULT_TOL
) -> tuple[DensityMatrix, float]:
    """Maximize Tr(Cρ) over {ρ ⪰ 0, ρ^T1 ⪰ 0, Tr ρ = 1}."""
    dims = BipartiteDims(*dims)
    c_op = hermitize(c_op)
    if c_op.shape[0] != dims.total:
        raise ValidationError(f"objective dimension {c_op.shape[0]} != {dims.total}")
    skeleton, emb = _ppt_skeleton(dims.d1, dims.d2)
    c = np.zeros(skeleton.num_coords)
    e1 = skeleton.blocks[0]
    c[e1.offset : e1.offset + e1.num_coords] = svec(emb.embed(c_op) / 2.0)
    program = ConicProgram(
        skeleton.blocks, c, skeleton.a_rows, skeleton.a_cols, skeleton.a_vals,
        skeleton.b, True,
    )
    sol = require_optimal(solve(program, tol), "linear_over_ppt")
    return _state_from_block(sol, 0, emb, dims), sol.primal_objective


def _state_from_block(
    sol: ConicSolution, index: int, emb: ComplexEmbedding, dims: BipartiteDims | None
) -> DensityMatrix:
    rho = emb.extract(sol.block_value(index))
    w, u = np.linalg.eigh(rho)
    w = np.maximum(w, 0.0)
    rho = (u * w) @ u.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, dims)


def linear_over_states(
    c_op: np.ndarray,
    constraints: list[tuple[np.ndarray, float]],
    dim: int,
    tol: float = DEFAULT_TOL,
) -> tuple[DensityMatrix, float]:
    """Maximize Tr(Cρ) over density matrices with Tr(O_k ρ) = e_k pinned."""
    c_op = hermitize(c_op)
    emb = embed_complex_psd(dim)
    builder = ProgramBuilder(maximize=True)
    e1 = builder.add_block("psd", 2 * dim)
    builder.add_constraint([(e1, np.eye(2 * dim) / 2.0)], 1.0)
    for o_k, e_k in constraints:
        builder.add_constraint([(e1, emb.embed(hermitize(o_k)) / 2.0)], float(e_k))
    builder.set_objective(e1, emb.embed(c_op) / 2.0)
    sol = require_optimal(solve(builder.build(), tol), "linear_over_states")
    return _state_from_block(sol, 0, emb, None), sol.primal_objective


# --------------------------------------------------------------------------
# level-1 moment relaxation of the cap-constrained QFI maximization
# --------------------------------------------------------------------------


def _hermitian_coords(d: int) -> list[list[list[tuple[int, complex]]]]:
    """Linear forms expressing H_ab in the d² real coordinates of Hermitian H.

    Coordinate order: diagonal entries, then real parts of the upper
    off-diagonals row-major, then their imaginary parts in the same order.
    """
    n_off = d * (d - 1) // 2
    pair_index = {}
    k = 0
    for a in range(d):
        for b in range(a + 1, d):
            pair_index[(a, b)] = k
            k += 1
    forms: list[list[list[tuple[int, complex]]]] = [[[] for _ in range(d)] for _ in range(d)]
    for a in range(d):
        for b in range(d):
            if a == b:
                forms[a][b] = [(a, 1.0 + 0j)]
            elif a < b:
                idx = pair_index[(a, b)]
                forms[a][b] = [(d + idx, 1.0 + 0j), (d + n_off + idx, 1j)]
            else:
                idx = pair_index[(b, a)]
                forms[a][b] = [(d + idx, 1.0 + 0j), (d + n_off + idx, -1j)]
    return forms


def coords_to_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    """Assemble a Hermitian matrix from its real coordinate vector."""
    forms = _hermitian_coords(d)
    h = np.zeros((d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            h[a, b] = sum(coeff * v[i] for i, coeff in forms[a][b])
    return h


def hermitian_to_coords(h: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`coords_to_hermitian`."""
    h = np.asarray(h)
    n_off = d * (d - 1) // 2
    v = np.empty(d * d)
    v[:d] = np.diag(h).real
    k = 0
    for a in range(d):
        for b in range(a + 1, d):
            v[d + k] = h[a, b].real
            v[d + n_off + k] = h[a, b].imag
            k += 1
    return v


def _joint_basis(d1: int, d2: int) -> list[np.ndarray]:
    """Joint-space operator generated by each real coordinate of (H1, H2)."""
    mats = []
    i1, i2 = np.eye(d1), np.eye(d2)
    for j in range(d1 * d1):
        v = np.zeros(d1 * d1)
        v[j] = 1.0
        mats.append(kron(coords_to_hermitian(v, d1), i2))
    for j in range(d2 * d2):
        v = np.zeros(d2 * d2)
        v[j] = 1.0
        mats.append(kron(i1, coords_to_hermitian(v, d2)))
    return mats


def qfi_quadratic_form(rho: DensityMatrix) -> np.ndarray:
    """Matrix R̂ with F_Q[ϱ, H(v)] = vᵀ R̂ v over the real parameterization."""
    dims = rho.require_dims()
    basis = _joint_basis(dims.d1, dims.d2)
    q2 = (q_matrix(rho) ** 2).ravel()
    bmat = np.array([rho.to_eigenbasis(m).ravel() for m in basis])
    r = (bmat * q2) @ bmat.conj().T
    return (r + r.conj().T).real / 2.0


def _square_entry_forms(d: int, offset: int, nvars: int) -> dict[tuple[int, int], np.ndarray]:
    """Coefficient matrices C with (H²)_ab = Σ_pq C_pq v_p v_q."""
    forms = _hermitian_coords(d)
    out = {}
    for a in range(d):
        for b in range(d):
            cmat = np.zeros((nvars, nvars), dtype=complex)
            for c in range(d):
                for p, cp in forms[a][c]:
                    for q_, cq in forms[c][b]:
                        cmat[offset + p, offset + q_] += cp * cq
            out[(a, b)] = cmat
    return out


def shor_level1(
    rho: DensityMatrix,
    caps: tuple[float, float] = (1.0, 1.0),
    trace_pinning: bool = False,
    mode: str = "eig",
    tol: float = DEFAULT_TOL,
    rank1_rtol: float = 1e-6,
) -> tuple[float, LocalHamiltonian | None]:
    """Level-1 moment (Shor) upper bound on max F_Q over capped local Hamiltonians.

    The rank-1 outer product [1; v][1; v]ᵀ is relaxed to a PSD moment matrix
    M = [[1, vᵀ], [v, V]] and the caps enter linearly in V. ``mode`` selects
    the encoding: "eig" imposes H_n² = c_n² 1 entrywise; "sum" imposes
    H1² ⊗ 1 + 1 ⊗ H2² ⪯ 1 (caps ignored); "trace" imposes
    Tr(H1²) + Tr(H2²) ≤ 1 (caps ignored). With ``trace_pinning`` (eig mode)
    the bound is tightened by scanning Tr(H_n) = m_n c_n over all integer
    signatures compatible with ±c_n spectra and taking the maximum.

    Returns the bound and, when the optimal moment matrix is numerically rank
    one, the certified-optimal Hamiltonian extracted from its top eigenvector.
    """
    if mode not in ("eig", "sum", "trace"):
        raise ValidationError(f"unknown relaxation mode {mode!r}")
    dims = rho.require_dims()
    d1, d2 = dims
    c1, c2 = (float(c) for c in caps)
    r_hat = qfi_quadratic_form(rho)

    if not trace_pinning or mode != "eig":
        return _shor_solve(dims, r_hat, (c1, c2), mode, None, tol, rank1_rtol)

    best_bound, best_extracted = -np.inf, None
    for m1 in range(-d1, d1 + 1):
        if (d1 - m1) % 2:
            continue  # spectra of ±c_n force Tr/c ≡ d (mod 2)
        for m2 in range(-d2, d2 + 1):
            if (d2 - m2) % 2:
                continue
            bound, extracted = _shor_solve_pinned(
                dims, r_hat, (c1, c2), (m1, m2), tol, rank1_rtol
            )
            if bound > best_bound:
                best_bound, best_extracted = bound, extracted
    return best_bound, best_extracted


def _shor_solve_pinned(dims, r_hat, caps, pinning, tol, rank1_rtol):
    """One signature of the pinned scan.

    A pin |m_n| = d_n forces H_n = ±c_n·1, which contributes nothing to the
    QFI (it only shifts the generator by a multiple of the identity) but
    leaves the moment problem without interior, so those coordinates are
    eliminated and the remaining subsystem is solved on its own.
    """
    d1, d2 = dims
    c1, c2 = caps
    m1, m2 = pinning
    fixed1 = abs(m1) == d1
    fixed2 = abs(m2) == d2
    id1 = np.sign(m1) * c1 * np.eye(d1)
    id2 = np.sign(m2) * c2 * np.eye(d2)
    if fixed1 and fixed2:
        return 0.0, LocalHamiltonian(id1, id2, caps)
    if fixed1 or fixed2:
        keep = 1 if fixed1 else 0
        d, c, m = (d2, c2, m2) if fixed1 else (d1, c1, m1)
        off = d1 * d1 if fixed1 else 0
        sub = r_hat[off : off + d * d, off : off + d * d]
        bound, h = _moment_solve([(d, c, m)], sub, tol, rank1_rtol)
        extracted = None
        if h is not None:
            extracted = (
                LocalHamiltonian(id1, h[0], caps) if fixed1 else LocalHamiltonian(h[0], id2, caps)
            )
        return bound, extracted
    bound, h = _moment_solve([(d1, c1, m1), (d2, c2, m2)], r_hat, tol, rank1_rtol)
    return bound, None if h is None else LocalHamiltonian(h[0], h[1], caps)


def _shor_solve(dims, r_hat, caps, mode, pinning, tol, rank1_rtol):
    d1, d2 = dims
    c1, c2 = caps
    if mode == "eig":
        m1, m2 = pinning if pinning is not None else (None, None)
        bound, hs = _moment_solve([(d1, c1, m1), (d2, c2, m2)], r_hat, tol, rank1_rtol)
        return bound, None if hs is None else LocalHamiltonian(hs[0], hs[1], caps)

    nvars = d1 * d1 + d2 * d2
    msize = 1 + nvars
    builder = ProgramBuilder(maximize=True)
    moment = builder.add_block("psd", msize)

    w = np.zeros((msize, msize))
    w[0, 0] = 1.0
    builder.add_constraint([(moment, w)], 1.0)

    obj = np.zeros((msize, msize))
    obj[1:, 1:] = r_hat
    builder.set_objective(moment, obj)

    def lift(vmat: np.ndarray) -> np.ndarray:
        full = np.zeros((msize, msize))
        full[1:, 1:] = vmat
        return full

    if mode == "trace":
        diag = np.zeros(nvars)
        for offset, d in ((0, d1), (d1 * d1, d2)):
            n_off = d * (d - 1) // 2
            diag[offset : offset + d] = 1.0
            diag[offset + d : offset + d + 2 * n_off] = 2.0
        slack = builder.add_block("nonneg", 1)
        builder.add_constraint([(moment, lift(np.diag(diag))), (slack, np.ones(1))], 1.0)
    else:  # "sum"
        _add_sum_mode_block(builder, moment, dims, nvars, msize, lift)

    sol = require_optimal(solve(builder.build(), tol), "shor_level1")
    return sol.primal_objective, None


def _moment_solve(specs, r_hat, tol, rank1_rtol):
    """Level-1 moment solve over Hermitian blocks with spectra ±c.

    ``specs`` lists (dimension, cap, trace-signature-or-None) per block;
    ``r_hat`` is the objective's quadratic form over the concatenated real
    coordinates. Returns the bound and, when a rank-one optimum can be
    certified, the list of extracted Hermitian matrices.
    """
    nvars = sum(d * d for d, _, _ in specs)
    msize = 1 + nvars

    builder = ProgramBuilder(maximize=True)
    moment = builder.add_block("psd", msize)

    w = np.zeros((msize, msize))
    w[0, 0] = 1.0
    builder.add_constraint([(moment, w)], 1.0)

    obj = np.zeros((msize, msize))
    obj[1:, 1:] = r_hat
    builder.set_objective(moment, obj)

    def lift(vmat: np.ndarray) -> np.ndarray:
        full = np.zeros((msize, msize))
        full[1:, 1:] = vmat
        return full

    offset = 0
    for d, c, m in specs:
        entry = _square_entry_forms(d, offset, nvars)
        for a in range(d):
            for b in range(a, d):
                cmat = entry[(a, b)]
                re = (cmat.real + cmat.real.T) / 2.0
                im = (cmat.imag + cmat.imag.T) / 2.0
                builder.add_constraint([(moment, lift(re))], c * c if a == b else 0.0)
                if a != b and np.any(np.abs(im) > 1e-15):
                    builder.add_constraint([(moment, lift(im))], 0.0)
        if m is not None:
            w = np.zeros((msize, msize))
            for a in range(d):
                w[0, 1 + offset + a] = w[1 + offset + a, 0] = 0.5
            builder.add_constraint([(moment, w)], m * c)
        offset += d * d

    sol = require_optimal(solve(builder.build(), tol), "shor_level1")
    bound = sol.primal_objective

    extracted = _extract_rank1(sol.block_value(0), specs, rank1_rtol)
    if extracted is None:
        # Degenerate optima leave the interior-point solver at the center of
        # the optimal face; pin the objective there and maximize a fixed
        # generic functional to land on an extreme (rank-1) point instead.
        slack = builder.add_block("nonneg", 1)
        delta = max(1e-7, 1e-9 * abs(bound))
        builder.add_constraint([(moment, obj), (slack, -np.ones(1))], bound - delta)
        rng = np.random.default_rng(0x5EED)
        p = rng.standard_normal((msize, msize))
        builder._obj = {}
        builder.set_objective(moment, (p + p.T) / 2.0)
        tie = solve(builder.build(), tol)
        if tie.status == "OPTIMAL":
            extracted = _extract_rank1(tie.block_value(0), specs, rank1_rtol)
    return bound, extracted


def _extract_rank1(mmat, specs, rank1_rtol):
    eigs, vecs = np.linalg.eigh(mmat)
    if eigs[-2] > rank1_rtol * max(eigs[-1], 1e-300):
        return None
    u = vecs[:, -1] * math.sqrt(max(eigs[-1], 0.0))
    if abs(u[0]) <= 1e-8:
        return None
    v = u[1:] / u[0]
    out = []
    offset = 0
    for d, _, _ in specs:
        out.append(coords_to_hermitian(v[offset : offset + d * d], d))
        offset += d * d
    return out


def _add_sum_mode_block(builder, moment, dims, nvars, msize, lift):
    """PSD slack T = embed(1 − H1²⊗1 − 1⊗H2²) tied linearly to the moment block."""
    d1, d2 = dims
    n = d1 * d2
    emb = embed_complex_psd(n)
    t_blk = builder.add_block("psd", 2 * n)
    tdim = svec_dim(2 * n)

    sq1 = _square_entry_forms(d1, 0, nvars)
    sq2 = _square_entry_forms(d2, d1 * d1, nvars)

    # For each svec coordinate of T: T_j + Tr(W_j M) = svec(embed(1))_j, where
    # W_j collects the quadratic forms of embed(S)_j, S = H1²⊗1 + 1⊗H2².
    target = svec(emb.embed(np.eye(n)))
    tsel = np.zeros(tdim)
    for j in range(tdim):
        tsel[j] = 1.0
        sel = emb.extract(smat(tsel, 2 * n))  # Hermitian selector: ⟨smat_j, embed(Q)⟩ = 2 Tr(sel† Q)
        tsel[j] = 0.0
        wmat = np.zeros((nvars, nvars), dtype=complex)
        for (a, b), cmat in sq1.items():
            weight = sum(sel[a * d2 + jj, b * d2 + jj] for jj in range(d2))
            if weight != 0.0:
                wmat += np.conj(weight) * cmat * emb.factor
        for (a, b), cmat in sq2.items():
            weight = sum(sel[ii * d2 + a, ii * d2 + b] for ii in range(d1))
            if weight != 0.0:
                wmat += np.conj(weight) * cmat * emb.factor
        re = (wmat.real + wmat.real.T) / 2.0
        unit = np.zeros(tdim)
        unit[j] = 1.0
        builder.add_constraint(
            [(t_blk, smat(unit, 2 * n)), (moment, lift(re))], float(target[j])
        )
