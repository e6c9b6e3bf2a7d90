"""Iterative maximizers: see-saws over local Hamiltonians and states, power
iteration, purity maximization and the realignment-norm see-saw over PPT
states.

Every alternating scheme here shares one correctness property: each half-step
exactly maximizes the bilinear objective over its own argument, so the
recorded objective history is nondecreasing. Restarts are independent and
deterministic — restart ``i`` draws from a generator seeded with ``seed ^ i``
— and the best value over restarts is reported.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, ValidationError
from .linalg import (
    BipartiteDims,
    hermitian_eig,
    hermitize,
    partial_trace,
    realign,
    realign_adjoint,
    trace_norm,
)
from .metrology import (
    DensityMatrix,
    GainReport,
    LocalHamiltonian,
    q_matrix,
    qfi,
    wy_coefficient_matrix,
)
from . import sdp


@dataclass(frozen=True)
class SeesawConfig:
    """Restart/termination policy shared by the iterative maximizers."""

    restarts: int = 50
    max_iters: int = 500
    tol: float = 1e-9
    seed: int = 0
    cap_pair: tuple[float, float] = (1.0, 1.0)
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")

    def rng_for(self, restart: int) -> np.random.Generator:
        return np.random.default_rng(self.seed ^ restart)


@dataclass(frozen=True)
class SeesawResult:
    best_value: float
    best_argument: object  # LocalHamiltonian, or DensityMatrix for state-side runs
    iterations_per_restart: list[int]
    objective_history: list[list[float]] = field(repr=False)
    converged: bool = True


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian part of a complex Ginibre matrix with i.i.d. N(0,1) entries."""
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


# --------------------------------------------------------------------------
# see-saw over local Hamiltonians (QFI, Wigner-Yanase, auxiliary variant)
# --------------------------------------------------------------------------


def _sign_extremizer(w: np.ndarray, cap: float) -> np.ndarray:
    """argmax Tr(WH) over Hermitian H with spectrum in [-cap, cap].

    The optimum flips each eigenvalue of W to ±cap with sign(0) = +1, so the
    result always saturates the caps exactly.
    """
    vals, vecs = np.linalg.eigh(hermitize(w, tol=1e-7))
    signs = np.where(vals >= 0.0, cap, -cap)
    return (vecs * signs) @ vecs.conj().T


class _LocalSeesaw:
    """One state's worth of precomputed data for the Hamiltonian see-saw.

    ``coeff`` is the weight matrix in the eigenbasis of ϱ: Q∘Q for the QFI,
    4C for four times the Wigner-Yanase skew information.
    """

    def __init__(self, rho: DensityMatrix, coeff: np.ndarray):
        self.rho = rho
        self.dims = rho.require_dims()
        self.coeff = coeff

    def value(self, ham: LocalHamiltonian) -> float:
        ht = self.rho.to_eigenbasis(ham.assemble())
        return float(np.sum(self.coeff * np.abs(ht) ** 2))

    def step(self, ham: LocalHamiltonian, caps: tuple[float, float]) -> LocalHamiltonian:
        """Maximize the bilinear form over the second slot at fixed ``ham``."""
        ht = self.rho.to_eigenbasis(ham.assemble())
        g = self.rho.from_eigenbasis(self.coeff * ht)
        w1 = partial_trace(g, self.dims, keep=0)
        w2 = partial_trace(g, self.dims, keep=1)
        return LocalHamiltonian(
            _sign_extremizer(w1, caps[0]), _sign_extremizer(w2, caps[1]), caps
        )

    def restart(self, rng, caps, max_iters, tol):
        d1, d2 = self.dims
        ham = LocalHamiltonian(random_hermitian(d1, rng), random_hermitian(d2, rng), caps)
        ham = self.step(ham, caps)  # first cap-feasible iterate
        history = [self.value(ham)]
        converged = False
        for _ in range(max_iters):
            ham = self.step(ham, caps)
            history.append(self.value(ham))
            if abs(history[-1] - history[-2]) < tol:
                converged = True
                break
        return history[-1], ham, history, converged


def seesaw_step_local(
    rho: DensityMatrix, h_old: LocalHamiltonian, caps: tuple[float, float]
) -> LocalHamiltonian:
    """Single see-saw step: best cap-saturating Hamiltonian against ``h_old``."""
    return _LocalSeesaw(rho, q_matrix(rho) ** 2).step(h_old, caps)


def _run_restarts(engine_restart, config: SeesawConfig) -> SeesawResult:
    indices = range(config.restarts)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(engine_restart, indices))
    else:
        outcomes = [engine_restart(i) for i in indices]
    best = max(range(len(outcomes)), key=lambda i: outcomes[i][0])
    value, argument, _, converged = outcomes[best]
    return SeesawResult(
        best_value=value,
        best_argument=argument,
        iterations_per_restart=[len(o[2]) for o in outcomes],
        objective_history=[o[2] for o in outcomes],
        converged=converged,
    )


def seesaw_qfi_local(rho: DensityMatrix, config: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """Maximize F_Q[ϱ, H1⊗1 + 1⊗H2] over cap-constrained local Hamiltonians."""
    engine = _LocalSeesaw(rho, q_matrix(rho) ** 2)
    return _run_restarts(
        lambda i: engine.restart(config.rng_for(i), config.cap_pair, config.max_iters, config.tol),
        config,
    )


def seesaw_wy_local(rho: DensityMatrix, config: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """Maximize 4 I_ϱ(H) (four times the Wigner-Yanase skew information)."""
    engine = _LocalSeesaw(rho, 4.0 * wy_coefficient_matrix(rho))
    return _run_restarts(
        lambda i: engine.restart(config.rng_for(i), config.cap_pair, config.max_iters, config.tol),
        config,
    )


def seesaw_qfi_aux(rho: DensityMatrix, config: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """QFI see-saw in the auxiliary-variable form.

    Alternates the unconstrained closed-form step Y = Q∘H̃/2 with the same
    extreme-point Hamiltonian step as the bilinear see-saw, tracking
    G(H, Y) = 4 Σ [Y^r(QH^r − Y^r) + Y^i(QH^i − Y^i)], which equals the QFI
    at every Y-step point.
    """
    q = q_matrix(rho)
    engine = _LocalSeesaw(rho, q * q)
    dims = rho.require_dims()
    caps = config.cap_pair

    def h_step(y: np.ndarray) -> LocalHamiltonian:
        z = hermitize(4.0 * q * y, tol=1e-7)  # linear weight of the H-step
        g = rho.from_eigenbasis(z)
        w1 = partial_trace(g, dims, keep=0)
        w2 = partial_trace(g, dims, keep=1)
        return LocalHamiltonian(
            _sign_extremizer(w1, caps[0]), _sign_extremizer(w2, caps[1]), caps
        )

    def one_restart(i: int):
        rng = config.rng_for(i)
        d1, d2 = dims
        ham = LocalHamiltonian(random_hermitian(d1, rng), random_hermitian(d2, rng), caps)
        # seed step: the random start only shapes the first linear functional
        ham = h_step(q * rho.to_eigenbasis(ham.assemble()) / 2.0)
        history = []
        converged = False
        for _ in range(config.max_iters):
            ht = rho.to_eigenbasis(ham.assemble())
            y = q * ht / 2.0  # unconstrained maximizer of G at fixed H
            history.append(float(np.sum(q * q * np.abs(ht) ** 2)))
            if len(history) > 1 and abs(history[-1] - history[-2]) < config.tol:
                converged = True
                break
            ham = h_step(y)
        return history[-1], ham, history, converged

    return _run_restarts(one_restart, config)


# --------------------------------------------------------------------------
# state-side see-saw (variational QFI maximization over a state set)
# --------------------------------------------------------------------------


def _variational_measurement(rho: DensityMatrix, h: np.ndarray) -> np.ndarray:
    """Maximizer M' of −⟨M'²⟩ + 2⟨i[M', H]⟩ at fixed ϱ (a rescaled SLD)."""
    ht = rho.to_eigenbasis(h)
    lam = rho.clamped_eigenvalues()
    s = lam[:, None] + lam[None, :]
    coeff = np.zeros_like(s)
    mask = s > 1e-12 * max(lam[0], 0.0)
    d = lam[None, :] - lam[:, None]
    coeff[mask] = d[mask] / s[mask]
    return rho.from_eigenbasis(2j * coeff * ht)


def seesaw_qfi_state(
    ham: LocalHamiltonian,
    state_set: str = "all",
    config: SeesawConfig = SeesawConfig(restarts=5),
) -> SeesawResult:
    """Maximize F_Q[ϱ, H] over a state set by alternating measurement and state.

    The measurement step is closed form; the state step maximizes the linear
    functional Tr[ϱ(−M'² + 2i[M', H])] over all states (top eigenvector) or
    over PPT states (conic solve). The objective is not jointly concave, so
    only monotone convergence to a local optimum is guaranteed.
    """
    if state_set not in ("all", "ppt"):
        raise ValidationError(f"state_set must be 'all' or 'ppt', got {state_set!r}")
    dims = ham.dims
    h = ham.assemble()
    dim = dims.total

    def one_restart(i: int):
        rng = config.rng_for(i)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        w = g @ g.conj().T
        rho = DensityMatrix(w / np.trace(w).real, dims)
        history = []
        converged = False
        for _ in range(config.max_iters):
            history.append(qfi(rho, h))
            if len(history) > 1 and abs(history[-1] - history[-2]) < config.tol:
                converged = True
                break
            m = _variational_measurement(rho, h)
            a = hermitize(-(m @ m) + 2j * (m @ h - h @ m), tol=1e-7)
            if state_set == "all":
                spec = hermitian_eig(a)
                v = spec.eigenvectors[:, 0]
                rho = DensityMatrix(np.outer(v, v.conj()), dims)
            else:
                rho, _ = sdp.linear_over_ppt(a, dims)
        return history[-1], rho, history, converged

    return _run_restarts(one_restart, config)


# --------------------------------------------------------------------------
# power iteration
# --------------------------------------------------------------------------


def power_iteration(
    a: np.ndarray,
    tol: float = 1e-9,
    max_iters: int = 20000,
    rng: np.random.Generator | None = None,
    shift: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Dominant eigenvalue/eigenvector of a PSD Hermitian matrix.

    Indefinite inputs can be handled by passing a diagonal ``shift`` s, which
    iterates on A + s·1 and subtracts s from the reported eigenvalue. Stops
    when the residual ‖Ax − λx‖ falls below ``tol``; exceeding ``max_iters``
    raises :class:`NumericalError`.
    """
    a = hermitize(a)
    n = a.shape[0]
    if shift:
        a = a + shift * np.eye(n)
    rng = rng or np.random.default_rng(0)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    for _ in range(max_iters):
        y = a @ x
        ev = float(np.real(np.vdot(x, y)))
        if np.linalg.norm(y - ev * x) <= tol:
            return ev - shift, x
        norm = np.linalg.norm(y)
        if norm == 0.0:  # A annihilates x: x is an exact eigenvector
            return -shift, x
        x = y / norm
    raise NumericalError(f"power iteration did not converge in {max_iters} iterations")


# --------------------------------------------------------------------------
# purity maximization under expectation constraints
# --------------------------------------------------------------------------


def purity_seesaw(
    constraints: list[tuple[np.ndarray, float]],
    dim: int,
    config: SeesawConfig = SeesawConfig(restarts=3, max_iters=50),
) -> tuple[DensityMatrix, float]:
    """Maximize Tr(ϱ²) subject to Tr(O^(k) ϱ) = e^(k).

    Alternates σ ← ϱ with the conic step ϱ ← argmax Tr(ϱσ) over the
    constrained state set; the purity sequence is nondecreasing and the
    iteration typically settles within a couple of steps. Infeasible
    constraint sets surface as :class:`InfeasibleError`.
    """
    best: tuple[float, DensityMatrix] | None = None
    for i in range(config.restarts):
        rng = config.rng_for(i)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        sigma = g @ g.conj().T
        sigma /= np.trace(sigma).real
        purity = -np.inf
        rho = None
        for _ in range(config.max_iters):
            rho, _ = sdp.linear_over_states(sigma, constraints, dim)
            new_purity = float(np.trace(rho.mat @ rho.mat).real)
            sigma = rho.mat
            if new_purity - purity < max(config.tol, 1e-9):
                purity = max(purity, new_purity)
                break
            purity = new_purity
        if best is None or purity > best[0]:
            best = (purity, rho)
    assert best is not None
    return best[1], best[0]


# --------------------------------------------------------------------------
# realignment-norm maximization over PPT states
# --------------------------------------------------------------------------


def ccnr_max_ppt(
    dims: BipartiteDims, config: SeesawConfig = SeesawConfig(restarts=5, max_iters=200)
) -> tuple[DensityMatrix, float]:
    """Maximize ‖R(ϱ)‖_tr over PPT states of the given dimensions.

    Uses the dual pairing ‖X‖_tr = max_{Y†Y ⪯ 1} Re Tr(X†Y): the Y-step is
    the polar factor of the realigned matrix, the ϱ-step a PPT-constrained
    linear solve of the adjoint functional. Restarts begin from random
    contraction matrices Y.
    """
    dims = BipartiteDims(*dims)
    # termination can't be tighter than the conic solver's accuracy
    tol = max(config.tol, 10 * sdp.DEFAULT_TOL)

    best: tuple[float, DensityMatrix] | None = None
    for i in range(config.restarts):
        rng = config.rng_for(i)
        g = rng.standard_normal((dims.d1**2, dims.d2**2)) + 1j * rng.standard_normal(
            (dims.d1**2, dims.d2**2)
        )
        u, _, vh = np.linalg.svd(g, full_matrices=False)
        y = u @ vh
        value = -np.inf
        rho = None
        for _ in range(config.max_iters):
            c_op = realign_adjoint(y, dims)
            c_op = (c_op + c_op.conj().T) / 2.0
            rho, _ = sdp.linear_over_ppt(c_op, dims)
            x = realign(rho.mat, dims)
            u, s, vh = np.linalg.svd(x)
            y = u @ vh
            new_value = float(np.sum(s))
            if new_value - value < tol:
                value = max(value, new_value)
                break
            value = new_value
        if best is None or value > best[0]:
            best = (value, rho)
    assert best is not None
    return best[1], best[0]


# --------------------------------------------------------------------------
# global metrological gain
# --------------------------------------------------------------------------


def gain_global(
    rho: DensityMatrix,
    config: SeesawConfig = SeesawConfig(),
    theta_grid: int = 33,
    refine_width: float = 1e-4,
) -> GainReport:
    """Maximize the gain over local Hamiltonians and cap ratios.

    Only the ratio c2/c1 matters, so caps are scanned as
    (cos θ, sin θ) over a uniform grid in (0, π/2) and the best grid point is
    refined by golden-section search down to ``refine_width`` in θ.
    """
    rho.require_dims()
    evaluations: dict[float, SeesawResult] = {}

    def run(theta: float) -> SeesawResult:
        if theta not in evaluations:
            caps = (math.cos(theta), math.sin(theta))
            evaluations[theta] = seesaw_qfi_local(rho, replace(config, cap_pair=caps))
        return evaluations[theta]

    def gain_at(theta: float) -> float:
        return run(theta).best_value / 4.0  # F_sep = 4(cos² + sin²) = 4

    thetas = [(j + 1) * (math.pi / 2) / (theta_grid + 1) for j in range(theta_grid)]
    values = [gain_at(t) for t in thetas]
    k = int(np.argmax(values))
    lo = thetas[k - 1] if k > 0 else thetas[0] / 2
    hi = thetas[k + 1] if k + 1 < len(thetas) else (thetas[-1] + math.pi / 2) / 2

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = gain_at(c), gain_at(d)
    while b - a > refine_width:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = gain_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = gain_at(d)
    candidates = [(gain_at(t), t) for t in (thetas[k], c, d)]
    best_gain, best_theta = max(candidates)
    result = run(best_theta)
    ham = result.best_argument
    return GainReport(
        value=best_gain,
        qfi=result.best_value,
        sep_bound=4.0,
        optimal_hamiltonian=ham,
        theta=best_theta,
        diagnostics={
            "restarts": config.restarts,
            "theta_evaluations": len(evaluations),
            "iterations_per_restart": result.iterations_per_restart,
            "per_restart_best": [h[-1] for h in result.objective_history],
            "converged": result.converged,
        },
    )
