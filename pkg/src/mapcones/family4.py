"""The commuting family ``alpha P + beta D + gamma T + delta Id``.

``P``, ``D``, ``T`` and ``Id`` commute, with products

    PP = P, PD = DP = P, PT = TP = P, DD = D, DT = TD = D, TT = Id,

so the family is closed under composition and exponentiation and every
question about it reduces to scalar formulas. The Choi matrix of
``(a, b, c, d)`` has eigenvalues

    a/n - c    (multiplicity (n^2 - n)/2, antisymmetric vectors)
    a/n + c    (multiplicity (n^2 - n)/2, symmetric off-diagonal vectors)
    a/n + b + c          (multiplicity n - 1)
    a/n + b + c + n d    (multiplicity 1, along vec(I))

and its partial transpose is the Choi matrix of ``(a, b, d, c)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from mapcones.superop import depolarizing, diagonal_expectation, identity, transposition

SCAN_POINTS = 64
BISECT_TOL = 1e-10
DEFAULT_BRACKET = (1e-8, 100.0)


@dataclass(frozen=True)
class FamilyParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    n: int = 2

    @property
    def coeffs(self):
        return (self.alpha, self.beta, self.gamma, self.delta)

    def to_superop(self):
        n = self.n
        return (
            depolarizing(n) * self.alpha
            + diagonal_expectation(n) * self.beta
            + transposition(n) * self.gamma
            + identity(n) * self.delta
        )

    def swap_gamma_delta(self):
        return FamilyParams(self.alpha, self.beta, self.delta, self.gamma, self.n)


def choi_eigs(p):
    """Closed-form Choi eigenvalues as ``[(value, multiplicity), ...]``."""
    a, b, c, d = p.coeffs
    n = p.n
    m = (n * n - n) // 2
    return [
        (a / n - c, m),
        (a / n + c, m),
        (a / n + b + c, n - 1),
        (a / n + b + c + n * d, 1),
    ]


def min_choi_eig(p):
    return min(v for v, m in choi_eigs(p) if m > 0)


def min_pt_eig(p):
    """Smallest eigenvalue of the partially transposed Choi matrix."""
    return min_choi_eig(p.swap_gamma_delta())


def cp_slack(p):
    """``alpha - max{n|gamma|, -n(beta+gamma), -n(beta+gamma) - n^2 delta}``."""
    a, b, c, d = p.coeffs
    n = p.n
    return a - max(n * abs(c), -n * (b + c), -n * (b + c) - n * n * d)


def is_cp_family(p, tol=0.0):
    return cp_slack(p) >= -tol


def is_ppt_family(p, tol=0.0):
    return is_cp_family(p, tol) and is_cp_family(p.swap_gamma_delta(), tol)


def _check_k(k, n):
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")


def is_k_positive_10(alpha, delta, k, n):
    """``alpha P + delta Id`` is k-positive iff ``alpha >= 0`` and ``delta >= -alpha/(k n)``."""
    _check_k(k, n)
    return alpha >= 0 and delta >= -alpha / (k * n)


def is_k_positive_01(alpha, gamma, k, n):
    """``alpha P + gamma T``: 1-positive iff ``alpha >= max(0, -n gamma)``; for ``k >= 2`` iff ``alpha >= n|gamma|``."""
    _check_k(k, n)
    if k == 1:
        return alpha >= 0 and alpha >= -n * gamma
    return alpha >= n * abs(gamma)


def is_k_positive_family(p, k):
    """Exact k-positivity on the two two-parameter slices; ``None`` elsewhere."""
    a, b, c, d = p.coeffs
    if b == 0 and c == 0:
        return is_k_positive_10(a, d, k, p.n)
    if b == 0 and d == 0:
        return is_k_positive_01(a, c, k, p.n)
    if k == p.n:
        return is_cp_family(p)
    return None


def compose_family(p1, p2):
    """Coefficients of ``Phi(p1) o Phi(p2)`` from the product table."""
    if p1.n != p2.n:
        raise ValueError(f"dimension mismatch: {p1.n} vs {p2.n}")
    a1, b1, g1, d1 = p1.coeffs
    a2, b2, g2, d2 = p2.coeffs
    return FamilyParams(
        a1 * (a2 + b2 + g2 + d2) + a2 * (b1 + g1 + d1),
        b1 * (b2 + g2 + d2) + b2 * (g1 + d1),
        g1 * d2 + d1 * g2,
        d1 * d2 + g1 * g2,
        p1.n,
    )


def evolve_family(L, t):
    """Coefficients of ``exp(t L)``."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    a, b, c, d = L.coeffs
    return FamilyParams(
        math.exp(t * (b + c + d)) * math.expm1(t * a),
        math.exp(t * (c + d)) * math.expm1(t * b),
        math.exp(t * d) * math.sinh(t * c),
        math.exp(t * d) * math.cosh(t * c),
        L.n,
    )


# -- cone predicates along a trajectory ----------------------------------------

def cone_margin(p, cone):
    """Signed margin: nonnegative exactly when ``p`` lies in ``cone``."""
    cone = cone.upper()
    if cone == "CP":
        return min_choi_eig(p)
    if cone == "PPT" or (cone == "EB" and p.n == 2):
        return min(min_choi_eig(p), min_pt_eig(p))
    if cone == "EB":
        raise ValueError("exact EB test for the family is available only for n = 2")
    raise ValueError(f"unknown cone {cone!r}; expected CP, PPT or EB")


@dataclass(frozen=True)
class EntryTimeResult:
    """Outcome of an entry-time search.

    ``status`` is ``"entered"`` (``t_star`` finite), ``"inside"`` (inside over
    the whole bracket, ``t_star`` is the lower end) or ``"never_in_bracket"``
    (``t_star`` is infinite). ``crossings`` lists every located sign change as
    ``(t, direction)`` with direction ``+1`` for entering and ``-1`` for leaving.
    """

    cone: str
    status: str
    t_star: float
    method: str
    bracket: tuple
    residual: float
    bisection: float | None = None
    closed_form: float | None = None
    crossings: list = field(default_factory=list)

    def to_dict(self):
        def num(x):
            return None if x is None else (x if math.isfinite(x) else "inf")

        return {
            "cone": self.cone,
            "status": self.status,
            "t_star": num(self.t_star),
            "method": self.method,
            "bracket": list(self.bracket),
            "residual": self.residual,
            "bisection": num(self.bisection),
            "closed_form": num(self.closed_form),
            "crossings": [[t, d] for t, d in self.crossings],
        }


def _bisect(pred, lo, hi, tol):
    # pred(lo) != pred(hi)
    p_lo = pred(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _cubic_root(n):
    # positive root (> 1) of 2x^3 - (2+n) x^2 - n
    roots = np.roots([2.0, -(2.0 + n), 0.0, -float(n)])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 1.0]
    return max(real)


def closed_form_entry(L, cone):
    """Known closed-form entry times, or ``None`` when ``L`` is not a covered case.

    * ``L = (a, 0, 0, -a)``, PPT (and EB for n = 2): ``ln(n + 1) / a``.
    * ``L = (a, 0, a, -2a)``, CP: ``ln((n + sqrt(n^2 + 8n)) / 4) / a``.
    * same ``L``, PPT (EB for n = 2): the larger of the CP time and
      ``ln(x) / a``, ``x`` the root above 1 of ``2x^3 - (2+n)x^2 - n``.
    """
    a, b, c, d = L.coeffs
    n = L.n
    cone = cone.upper()
    if a <= 0 or b != 0:
        return None
    ppt_like = cone == "PPT" or (cone == "EB" and n == 2)
    if c == 0 and d == -a and ppt_like:
        return math.log(n + 1) / a
    if math.isclose(c, a, rel_tol=1e-15, abs_tol=0.0) and math.isclose(d, -a - c, rel_tol=1e-15, abs_tol=0.0):
        t_cp = math.log((n + math.sqrt(n * n + 8 * n)) / 4) / a
        if cone == "CP":
            return t_cp
        if ppt_like:
            return max(t_cp, math.log(_cubic_root(n)) / a)
    return None


def entry_time(L, cone, bracket=DEFAULT_BRACKET, tol=BISECT_TOL, points=SCAN_POINTS):
    """First time after which ``exp(tL)`` stays in ``cone`` on the bracket.

    The exact predicate ``cone_margin >= 0`` is scanned on ``points``
    log-spaced times; each sign change is refined by bisection to width
    ``tol``. ``t_star`` is the last entering crossing when the trajectory
    ends inside. Closed forms, when available, are reported alongside.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < t_lo < t_hi, got {bracket}")

    def pred(t):
        return cone_margin(evolve_family(L, t), cone) >= 0

    ts = np.geomspace(lo, hi, points)
    inside = [pred(float(t)) for t in ts]
    crossings = []
    for i in range(points - 1):
        if inside[i] != inside[i + 1]:
            a, b = _bisect(pred, float(ts[i]), float(ts[i + 1]), tol)
            crossings.append((b if not inside[i] else a, 1 if not inside[i] else -1))
    closed = closed_form_entry(L, cone)
    if not inside[-1]:
        return EntryTimeResult(cone, "never_in_bracket", math.inf, "bisection", (lo, hi), math.nan,
                               closed_form=closed, crossings=crossings)
    if not crossings:
        t_star = lo
        status, bis = "inside", None
    else:
        t_star = bis = crossings[-1][0]
        status = "entered"
    method = "bisection"
    if closed is not None and bis is not None:
        method = "both"
    residual = cone_margin(evolve_family(L, t_star), cone)
    return EntryTimeResult(cone, status, t_star, method, (lo, hi), residual,
                           bisection=bis, closed_form=closed, crossings=crossings)


def ppt_determinant_condition(L, t, variant):
    """Determinant of the 2 x 2 block of the partially transposed Choi matrix.

    For ``n = 2`` and coefficients ``(a, 0, c, d)`` of ``exp(tL)`` the block on
    ``span{e1 (x) e2, e2 (x) e1}`` is ``[[a/2, d], [d, a/2]]``; its determinant
    ``a^2/4 - d^2`` is positive exactly when the evolved map is PPT.
    ``variant`` is ``"depolarizing"`` for ``L = (a, 0, 0, -a)`` or
    ``"depol+transpose"`` for ``L = (a, 0, g, -a - g)``.
    """
    a, b, c, d = L.coeffs
    if L.n != 2:
        raise ValueError("the determinant condition is stated for n = 2")
    if variant == "depolarizing":
        ok = b == 0 and c == 0 and d == -a
    elif variant == "depol+transpose":
        ok = b == 0 and math.isclose(d, -a - c, rel_tol=1e-15, abs_tol=1e-15)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if not ok:
        raise ValueError(f"generator {L.coeffs} is not in the {variant} subfamily")
    q = evolve_family(L, t)
    return 0.25 * q.alpha**2 - q.delta**2


TRAJECTORY_COLUMNS = (
    "t", "coefP", "coefD", "coefT", "coefId", "min_choi_eig", "ppt_min_eig", "cp", "ppt", "eb",
)


def trajectory(L, ts, tol=0.0):
    """One row per time: coefficients, spectral margins and cone flags."""
    rows = []
    for t in ts:
        q = evolve_family(L, float(t))
        mc = min_choi_eig(q)
        mp = min_pt_eig(q)
        cp = mc >= -tol
        ppt = cp and mp >= -tol
        rows.append({
            "t": float(t), "coefP": q.alpha, "coefD": q.beta, "coefT": q.gamma, "coefId": q.delta,
            "min_choi_eig": mc, "ppt_min_eig": mp, "cp": cp, "ppt": ppt,
            "eb": ppt if L.n == 2 else None,
        })
    return rows
