"""Double-well potentials, surface tension, and quadratic truncation.

A double well vanishes exactly at the two phases 0 and 1, grows
polynomially, and is convex far from the wells. The surface tension
sigma(alpha, beta) is the integral of sqrt(2W) between the phases. The
truncation replaces W outside a finite interval by its second-order
Taylor quadratic, keeping C2 regularity and linear derivative growth.
"""

import math

import numpy as np
from scipy.integrate import quad

__all__ = ["DoubleWell", "TruncatedPotential", "quartic_standard",
           "polynomial_well", "validate_assumptions", "sigma", "truncate"]


class DoubleWell:
    """Scalar potential with first and second derivatives.

    Parameters
    ----------
    w, dw, ddw : callables
        Vectorized evaluations of W, W', W''.
    growth_constants : dict
        {A, B, p} with |W'(s)| <= A + B |s|^(p-1).
    lower_upper_growth : dict
        {c1, c2, p1, p2, t0} with c1 |t|^p1 < W(t) < c2 |t|^p2 for |t| >= t0.
    barrier_delta : float
        W' > 0 on (1, 1 + barrier_delta].
    """

    def __init__(self, w, dw, ddw, growth_constants, lower_upper_growth,
                 barrier_delta, name="custom"):
        self.w = w
        self.dw = dw
        self.ddw = ddw
        self.growth_constants = dict(growth_constants)
        self.lower_upper_growth = dict(lower_upper_growth)
        self.barrier_delta = float(barrier_delta)
        self.name = name

    def __repr__(self):
        return f"DoubleWell({self.name})"


def quartic_standard():
    """The canonical quartic well W(s) = s^2 (1-s)^2."""
    return DoubleWell(
        w=lambda s: np.square(s) * np.square(1.0 - np.asarray(s, dtype=float)),
        dw=lambda s: 2.0 * np.asarray(s, dtype=float) * (1.0 - np.asarray(s, dtype=float))
        * (1.0 - 2.0 * np.asarray(s, dtype=float)),
        ddw=lambda s: 2.0 - 12.0 * np.asarray(s, dtype=float)
        + 12.0 * np.square(s),
        growth_constants={"A": 12.0, "B": 12.0, "p": 4},
        lower_upper_growth={"c1": 1.0, "c2": 2.0, "p1": 3.5, "p2": 4.0, "t0": 4.0},
        barrier_delta=0.5,
        name="quartic",
    )


def polynomial_well(coeffs, growth_constants, lower_upper_growth, barrier_delta,
                    name="polynomial"):
    """Double well from polynomial coefficients (ascending powers)."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    dp = p.deriv()
    ddp = dp.deriv()
    return DoubleWell(w=p, dw=dp, ddw=ddp,
                      growth_constants=growth_constants,
                      lower_upper_growth=lower_upper_growth,
                      barrier_delta=barrier_delta, name=name)


def validate_assumptions(well, s_max=100.0, n_grid=20001):
    """Grid check of the structural assumptions; raises on violation.

    Verifies the two nondegenerate wells at 0 and 1, the polynomial bound
    on W', positivity of W' just above 1, and the two-sided power growth
    of W far from the wells. The sub/supercritical exponent caps are
    vacuous for surfaces and are not enforced.
    """
    for s in (0.0, 1.0):
        if abs(float(well.w(s))) > 1e-12 or abs(float(well.dw(s))) > 1e-12:
            raise ValueError(f"W or W' does not vanish at phase {s}")
        if float(well.ddw(s)) <= 0.0:
            raise ValueError(f"W''({s}) is not positive")

    s = np.linspace(-s_max, s_max, n_grid)
    gc = well.growth_constants
    if not np.all(np.abs(well.dw(s)) <= gc["A"] + gc["B"] * np.abs(s) ** (gc["p"] - 1)
                  + 1e-9):
        raise ValueError("derivative growth bound |W'| <= A + B|s|^(p-1) fails")

    sb = np.linspace(1.0, 1.0 + well.barrier_delta, 201)[1:]
    if not np.all(well.dw(sb) > 0.0):
        raise ValueError("W' is not positive just above the upper phase")

    lg = well.lower_upper_growth
    if not (2.0 < lg["p1"] and lg["p1"] <= lg["p2"] <= 2.0 * (lg["p1"] - 1.0)):
        raise ValueError("growth exponents must satisfy 2 < p1, p2 <= 2(p1-1)")
    far = s[np.abs(s) >= lg["t0"]]
    wf = well.w(far)
    if not np.all((lg["c1"] * np.abs(far) ** lg["p1"] < wf)
                  & (wf < lg["c2"] * np.abs(far) ** lg["p2"])):
        raise ValueError("two-sided growth c1|t|^p1 < W < c2|t|^p2 fails")


def sigma(well, alpha, beta):
    """Surface tension: integral of sqrt(2 W) over [alpha, beta].

    Adaptive quadrature to 1e-10 relative error. The integrand has
    square-root zeros at interior wells, which quad handles once the
    wells inside the interval are listed as breakpoints.
    """
    if alpha > beta:
        raise ValueError(f"need alpha <= beta (got {alpha}, {beta})")
    if alpha == beta:
        return 0.0

    def integrand(s):
        w = float(well.w(s))
        if w < 0.0:
            raise ValueError(f"W({s}) = {w} < 0 inside the integration range")
        return math.sqrt(2.0 * w)

    pts = [p for p in (0.0, 1.0) if alpha < p < beta]
    val, err = quad(integrand, alpha, beta, points=pts or None,
                    epsabs=0.0, epsrel=1e-12, limit=200)
    if val > 0.0 and err > 1e-10 * val:
        raise RuntimeError(f"surface tension quadrature error {err:g} "
                           f"exceeds 1e-10 relative")
    return val


class TruncatedPotential:
    """C2 potential equal to a base well on [s_minus, s_plus], quadratic outside.

    Construction verifies the barrier inequalities
    -(1/eps) W'(s) - lambda_star > 0 on (-inf, s_minus] and
    -(1/eps) W'(s) + lambda_star < 0 on [s_plus, +inf)
    on a sample grid, so constrained flows started between the junctions
    cannot escape them.
    """

    def __init__(self, base, epsilon, lambda_star, s_minus, s_plus):
        if s_minus >= s_plus:
            raise ValueError("need s_minus < s_plus")
        self.base = base
        self.epsilon = float(epsilon)
        self.lambda_star = float(lambda_star)
        self.s_minus = float(s_minus)
        self.s_plus = float(s_plus)
        # Taylor data at the junctions; constant curvature outside.
        self._wp = float(base.w(s_plus))
        self._dwp = float(base.dw(s_plus))
        self._ddwp = float(base.ddw(s_plus))
        self._wm = float(base.w(s_minus))
        self._dwm = float(base.dw(s_minus))
        self._ddwm = float(base.ddw(s_minus))
        self.name = f"truncated({base.name})"
        self._verify_barriers()

    def _pieces(self, s):
        s = np.asarray(s, dtype=float)
        lo = s < self.s_minus
        hi = s > self.s_plus
        return s, lo, hi

    def w(self, s):
        s, lo, hi = self._pieces(s)
        out = np.asarray(self.base.w(np.clip(s, self.s_minus, self.s_plus)),
                         dtype=float).copy()
        h = s - self.s_plus
        out = np.where(hi, self._wp + self._dwp * h + 0.5 * self._ddwp * h * h, out)
        h = s - self.s_minus
        out = np.where(lo, self._wm + self._dwm * h + 0.5 * self._ddwm * h * h, out)
        return out if out.ndim else float(out)

    def dw(self, s):
        s, lo, hi = self._pieces(s)
        out = np.asarray(self.base.dw(np.clip(s, self.s_minus, self.s_plus)),
                         dtype=float).copy()
        out = np.where(hi, self._dwp + self._ddwp * (s - self.s_plus), out)
        out = np.where(lo, self._dwm + self._ddwm * (s - self.s_minus), out)
        return out if out.ndim else float(out)

    def ddw(self, s):
        s, lo, hi = self._pieces(s)
        out = np.asarray(self.base.ddw(np.clip(s, self.s_minus, self.s_plus)),
                         dtype=float).copy()
        out = np.where(hi, self._ddwp, out)
        out = np.where(lo, self._ddwm, out)
        return out if out.ndim else float(out)

    def _verify_barriers(self, n=200, reach=10.0):
        eps = self.epsilon
        lam = self.lambda_star
        below = np.linspace(self.s_minus - reach, self.s_minus, n)
        if not np.all(-self.dw(below) / eps - lam > 0.0):
            raise ValueError("lower barrier -(1/eps) W' - lambda_star > 0 fails")
        above = np.linspace(self.s_plus, self.s_plus + reach, n)
        if not np.all(-self.dw(above) / eps + lam < 0.0):
            raise ValueError("upper barrier -(1/eps) W' + lambda_star < 0 fails")

    def __repr__(self):
        return (f"TruncatedPotential({self.base.name}, "
                f"[{self.s_minus:g}, {self.s_plus:g}])")


def truncate(well, epsilon, lambda_star, t1, grid_step=1e-3, s_bound=1e6):
    """Truncate a well at the first grid points where (1/eps)|W'| clears lambda_star.

    s_plus is the smallest point of the grid t1, t1 + grid_step, ... with
    (1/eps) W'(s_plus) > lambda_star; s_minus mirrors this below -t1 with
    the sign flipped.
    """
    if lambda_star <= 0.0:
        raise ValueError("lambda_star must be positive")
    t0 = well.lower_upper_growth["t0"]
    if t1 < t0:
        raise ValueError(f"t1 = {t1} must be >= t0 = {t0}")
    eps = float(epsilon)

    def first_hit(start, direction, condition):
        n_chunk = 65536
        k0 = 0
        while start + k0 * grid_step <= s_bound:
            k = k0 + np.arange(n_chunk)
            s = direction * (start + k * grid_step)
            ok = condition(s)
            hit = np.nonzero(ok)[0]
            if hit.size:
                return float(s[hit[0]])
            k0 += n_chunk
        raise ValueError(f"no truncation point found with |s| <= {s_bound:g}; "
                         "derivative growth of the potential is insufficient")

    s_plus = first_hit(float(t1), 1.0, lambda s: well.dw(s) / eps > lambda_star)
    s_minus = first_hit(float(t1), -1.0, lambda s: well.dw(s) / eps < -lambda_star)
    return TruncatedPotential(well, eps, float(lambda_star), s_minus, s_plus)
