"""Phase-field energy, constrained gradient flow, and second variation.

The functional is E(u) = (eps/2) u'Su + (1/eps) sum(m W(u)) with the
linear volume constraint sum(m u) = V. Critical points satisfy the
pointwise equation eps (M^-1 S u) + (1/eps) W'(u) = lambda with the
multiplier lambda equal to the mass-weighted mean of (1/eps) W'(u).
The flow is semi-implicit (stiffness implicit, potential explicit) with
energy backtracking; each step conserves the volume exactly because the
stiffness annihilates constants.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, cg, eigsh

logger = logging.getLogger(__name__)

__all__ = ["CriticalPoint", "FlowConfig", "energy", "gradient",
           "solve_constrained", "ps_residual", "morse_index",
           "multiplier_audit"]


@dataclass
class FlowConfig:
    tau0: float = 1.0
    max_steps: int = 20000
    tol_grad: float = None        # default 1e-8 sqrt(total mass)
    backtrack: float = 0.5
    regrow: float = 1.2
    regrow_after: int = 5
    tau_max: float = None         # default 1e6 tau0
    cg_rtol: float = 1e-10
    record_every: int = 0         # 0 disables trajectory recording

    def __post_init__(self):
        if self.tau0 <= 0.0 or self.backtrack <= 0.0 or self.backtrack >= 1.0:
            raise ValueError("invalid flow configuration")


@dataclass
class CriticalPoint:
    u: np.ndarray
    lam: float
    energy: float
    grad_norm: float
    ps_norm: float
    steps: int
    epsilon: float
    V: float
    converged: bool
    morse_index: int = None
    eigenvalues: np.ndarray = None
    nondegenerate: bool = None
    base_point: int = None
    trajectory: list = field(default_factory=list)

    def record(self):
        """JSON-ready summary of this run."""
        return {
            "base_point": self.base_point,
            "epsilon": self.epsilon,
            "V": self.V,
            "energy": self.energy,
            "lambda": self.lam,
            "grad_norm": self.grad_norm,
            "ps_norm": self.ps_norm,
            "steps": self.steps,
            "morse_index": self.morse_index,
            "converged": self.converged,
        }


def energy(mesh, well, epsilon, u):
    """(eps/2) u'Su + (1/eps) sum(m W(u)); nonnegative for nonnegative W."""
    u = np.asarray(u, dtype=float)
    dirichlet = float(u @ (mesh.stiffness @ u))
    bulk = float(mesh.lumped_mass @ np.asarray(well.w(u), dtype=float))
    return 0.5 * epsilon * dirichlet + bulk / epsilon


def gradient(mesh, well, epsilon, u):
    """Pointwise gradient, its constraint projection, and the multiplier.

    raw = eps M^-1 S u + (1/eps) W'(u); lambda is the mass mean of raw
    (the stiffness part averages to zero); projected = raw - lambda.
    """
    u = np.asarray(u, dtype=float)
    m = mesh.lumped_mass
    raw = epsilon * (mesh.stiffness @ u) / m \
        + np.asarray(well.dw(u), dtype=float) / epsilon
    lam = float(m @ raw) / float(m.sum())
    return raw, raw - lam, lam


def _cg_solve(A, b, x0, rtol, precond_diag):
    Minv = sparse.diags(1.0 / precond_diag)
    try:
        x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, M=Minv)
    except TypeError:  # scipy < 1.12 spells the tolerance differently
        x, info = cg(A, b, x0=x0, tol=rtol, atol=0.0, M=Minv)
    if info != 0:
        raise RuntimeError(f"conjugate gradients stagnated (info={info})")
    return x


def solve_constrained(mesh, well, epsilon, V, u0, cfg=None, base_point=None):
    """Flow to a constrained critical point by semi-implicit stepping.

    Each step solves (M/tau + eps S) u+ = M (u/tau - (1/eps) W'(u) +
    lambda(u)); the right-hand side integrates to sum(m u), so the
    volume is conserved up to solver error, which a constant shift
    removes. Steps that raise the energy halve tau; five consecutive
    accepts regrow it.
    """
    cfg = cfg or FlowConfig()
    u = np.asarray(u0, dtype=float).copy()
    m = mesh.lumped_mass
    total_mass = float(m.sum())
    if abs(float(m @ u) - V) > 1e-8 * V:
        raise ValueError("initial state violates the volume constraint")
    tol_grad = cfg.tol_grad if cfg.tol_grad is not None \
        else 1e-8 * math.sqrt(total_mass)
    tau_max = cfg.tau_max if cfg.tau_max is not None else 1e6 * cfg.tau0

    S = mesh.stiffness
    M = sparse.diags(m)
    tau = cfg.tau0
    A = None
    tau_of_A = None
    E = energy(mesh, well, epsilon, u)
    accepts_in_row = 0
    converged = False
    steps = 0
    trajectory = []

    for step in range(1, cfg.max_steps + 1):
        steps = step
        raw, proj, lam = gradient(mesh, well, epsilon, u)
        grad_norm = math.sqrt(float(m @ (proj * proj)))
        if cfg.record_every and step % cfg.record_every == 1:
            trajectory.append((step, E, grad_norm, lam))
        if grad_norm <= tol_grad:
            converged = True
            break

        rhs_field = u / tau + lam - np.asarray(well.dw(u), dtype=float) / epsilon
        while True:
            if A is None or tau_of_A != tau:
                A = (M / tau + epsilon * S).tocsr()
                tau_of_A = tau
            u_new = _cg_solve(A, m * rhs_field, u, cfg.cg_rtol, A.diagonal())
            u_new += (V - float(m @ u_new)) / total_mass
            E_new = energy(mesh, well, epsilon, u_new)
            if E_new <= E + 1e-12 * abs(E):
                break
            tau *= cfg.backtrack
            accepts_in_row = 0
            if tau < 1e-14 * cfg.tau0:
                raise RuntimeError("flow stalled: step size collapsed without "
                                   "an energy decrease")
            rhs_field = u / tau + lam - np.asarray(well.dw(u), dtype=float) / epsilon
        u = u_new
        E = E_new
        accepts_in_row += 1
        if accepts_in_row >= cfg.regrow_after and tau < tau_max:
            tau = min(tau * cfg.regrow, tau_max)
            accepts_in_row = 0
    else:
        raw, proj, lam = gradient(mesh, well, epsilon, u)
        grad_norm = math.sqrt(float(m @ (proj * proj)))

    if not converged:
        logger.warning("flow did not converge in %d steps (grad %.3g > %.3g)",
                       cfg.max_steps, grad_norm, tol_grad)
    ps = ps_residual(mesh, well, epsilon, u, projected=proj, rtol=cfg.cg_rtol)
    return CriticalPoint(u=u, lam=lam, energy=E, grad_norm=grad_norm,
                         ps_norm=ps, steps=steps, epsilon=epsilon, V=V,
                         converged=converged, base_point=base_point,
                         trajectory=trajectory)


def ps_residual(mesh, well, epsilon, u, projected=None, rtol=1e-10):
    """Dual-norm residual: solve (eps S + M) w = M g and return sqrt(g'Mw).

    This is the discrete H^-1 size of the projected gradient, the
    quantity that must vanish along a Palais-Smale sequence.
    """
    if projected is None:
        _, projected, _ = gradient(mesh, well, epsilon, u)
    m = mesh.lumped_mass
    if not np.any(projected):
        return 0.0
    A = (epsilon * mesh.stiffness + sparse.diags(m)).tocsr()
    w = _cg_solve(A, m * projected, projected, rtol, A.diagonal())
    val = float(projected @ (m * w))
    return math.sqrt(max(val, 0.0))


def morse_index(mesh, well, epsilon, u, k_max, tol_eig=None, dense_cutoff=4096):
    """Negative modes of the constrained second variation.

    The Hessian eps M^-1 S + (1/eps) diag(W''(u)) is symmetrized by the
    M^(1/2) similarity and restricted to mean-zero fields by pushing the
    constant direction to a large positive penalty. Returns the index
    (eigenvalues below -tol_eig), the k_max smallest restricted
    eigenvalues, and a nondegeneracy flag (none within +-tol_eig of 0).
    """
    u = np.asarray(u, dtype=float)
    m = mesh.lumped_mass
    n = mesh.n_vertices
    if tol_eig is None:
        tol_eig = 1e-8 / epsilon
    d = np.asarray(well.ddw(u), dtype=float) / epsilon
    sq = np.sqrt(m)
    # B = eps M^-1/2 S M^-1/2 + diag(d), same spectrum as the Hessian.
    c = sq / np.linalg.norm(sq)
    gamma = 10.0 * (epsilon * _gershgorin_bound(mesh.stiffness, m)
                    + np.abs(d).max() + 1.0)

    if n <= dense_cutoff:
        B = epsilon * (mesh.stiffness.toarray() / sq[:, None] / sq[None, :])
        B[np.diag_indices_from(B)] += d
        B += gamma * np.outer(c, c)
        k = min(k_max, n - 1)
        vals = eigh(B, eigvals_only=True, subset_by_index=[0, k - 1])
    else:
        S = mesh.stiffness
        inv_sq = 1.0 / sq

        def matvec(x):
            y = epsilon * inv_sq * (S @ (inv_sq * x)) + d * x
            return y + gamma * c * (c @ x)

        op = LinearOperator((n, n), matvec=matvec, dtype=float)
        k = min(k_max, n - 2)
        vals = eigsh(op, k=k, which="SA", return_eigenvectors=False,
                     maxiter=5000)
        vals = np.sort(vals)

    vals = np.asarray(vals)
    index = int(np.count_nonzero(vals < -tol_eig))
    nondegenerate = bool(np.all(np.abs(vals) > tol_eig))
    return index, vals, nondegenerate


def _gershgorin_bound(S, m):
    row_abs = np.abs(S).sum(axis=1).A1 if hasattr(np.abs(S).sum(axis=1), "A1") \
        else np.asarray(np.abs(S).sum(axis=1)).ravel()
    return float((row_abs / m).max())


def multiplier_audit(runs):
    """Boundedness audit of |lambda| / E across a family of runs.

    Flags the family when the ratio spreads by more than a factor of 10
    over the represented epsilon range.
    """
    entries = []
    for r in runs:
        if r.energy <= 0.0:
            raise ValueError("multiplier audit needs positive energies")
        entries.append({"epsilon": r.epsilon, "V": r.V, "lambda": r.lam,
                        "energy": r.energy, "ratio": abs(r.lam) / r.energy})
    if not entries:
        return {"entries": [], "max_ratio": None, "spread": None,
                "bounded": None}
    ratios = [e["ratio"] for e in entries]
    lo, hi = min(ratios), max(ratios)
    spread = math.inf if lo == 0.0 else hi / lo
    return {"entries": entries, "max_ratio": hi, "spread": spread,
            "bounded": spread <= 10.0}
