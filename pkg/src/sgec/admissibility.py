"""Closed-form admissibility inequalities and exponential-decay certificates.

Everything here is scalar arithmetic on (k, beta, epsilon, alpha): the gain
threshold eta, the parameter-region check (in two independent forms, kept
separate on purpose so they can be compared against each other), the feasible
observer-gain interval, the delta coefficients, and the assembled certificate
constants (M, delta, H_max, C1, C2 and the trajectory constant c_corr used to
bound |H - Hhat| by sqrt(E)).
"""

import math
from dataclasses import dataclass

from .core import PhysicalParams

__all__ = [
    "AdmissibilityReport",
    "DecayCertificate",
    "eta",
    "check_assumption2",
    "piecewise_admissible",
    "alpha_interval",
    "deltas",
    "decay_certificate",
    "optimize_epsilon",
]

# pi^2 from the runtime constant, never hard-coded digits
_PI2 = math.pi * math.pi

_CASE_HIGH = "k > (pi^2+8)/pi^2"
_CASE_MID = "1 <= k <= (pi^2+8)/pi^2"
_CASE_LOW = "k < 1"

EPSILON_GRID_POINTS = 10_000


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the parameter-region check for one (k, beta) pair."""

    eta: float
    holds: bool
    case_label: str
    epsilon_range: tuple | None

    def __post_init__(self):
        # holds <=> nonempty range, by construction; guard against edits
        assert self.holds == (self.epsilon_range is not None)


@dataclass(frozen=True)
class DecayCertificate:
    """Constants certifying E(t) <= M E(0) exp(-delta t) plus energy bounds.

    c_corr is the trajectory constant in |H - Hhat| <= c_corr * sqrt(E);
    h_max bounds max(H, Hhat) along the closed loop.  params and h_star are
    kept so a verification can refuse records produced under different
    parameters.
    """

    params: PhysicalParams
    epsilon: float
    alpha: float
    delta1: float
    delta2: float
    delta3: float
    k0: float
    m_const: float
    delta_rate: float
    h_star: float
    h_max: float
    c1_const: float
    c2_const: float
    c_corr: float


def _eta_value(params):
    """eta(beta, k), or +inf when the denominator is not positive."""
    denom = _PI2 * params.k - (_PI2 + 4.0) * params.beta
    if denom <= 0.0:
        return math.inf
    return max(params.beta, 4.0 * params.beta / denom)


def eta(params):
    """Gain threshold max{beta, 4 beta / (pi^2 k - (pi^2+4) beta)}.

    Requires (1 + 4/pi^2) beta < k so the denominator is positive.
    """
    val = _eta_value(params)
    if math.isinf(val):
        raise ValueError(
            f"inadmissible parameters: need (1 + 4/pi^2)*beta < k "
            f"(k={params.k}, beta={params.beta})")
    return val


def _case_label(k):
    threshold = (_PI2 + 8.0) / _PI2
    if k > threshold:
        return _CASE_HIGH
    if k >= 1.0:
        return _CASE_MID
    return _CASE_LOW


def piecewise_beta_bound(k):
    """The largest admissible beta for a given k, by the three-case form."""
    if k > (_PI2 + 8.0) / _PI2:
        return 1.0
    if k >= 1.0:
        return _PI2 * k / (_PI2 + 8.0)
    return _PI2 * k * k / ((_PI2 + 4.0) * k + 4.0)


def piecewise_admissible(params):
    """Three-case characterization: beta strictly below the case bound."""
    return params.beta < piecewise_beta_bound(params.k)


def check_assumption2(params):
    """Full parameter-region check via the eta-based inequalities.

    holds is true iff (1 + 4/pi^2) beta < k and eta < min{1, k}; the report
    carries the case label and the open epsilon interval (eta, min{1, k}).
    An inadmissible pair is a valid report, not an error.
    """
    eta_val = _eta_value(params)
    cap = min(1.0, params.k)
    holds = math.isfinite(eta_val) and eta_val < cap
    return AdmissibilityReport(
        eta=eta_val,
        holds=holds,
        case_label=_case_label(params.k),
        epsilon_range=(eta_val, cap) if holds else None,
    )


def _require_epsilon(params, epsilon):
    report = check_assumption2(params)
    if not report.holds:
        raise ValueError(
            f"inadmissible parameters (k={params.k}, beta={params.beta}): "
            f"no valid epsilon exists")
    lo, hi = report.epsilon_range
    if not (lo < epsilon < hi):
        raise ValueError(
            f"epsilon={epsilon} outside the valid range ({lo}, {hi})")
    return report


def alpha_interval(params, epsilon):
    """Observer gains solving (eps k/2) a^2 - k a + eps/2 <= 0, as [lo, hi]."""
    _require_epsilon(params, epsilon)
    k = params.k
    disc = k * k - epsilon * epsilon * k
    # eps < min{1, k} implies eps^2 < k, so disc > 0
    root = math.sqrt(disc)
    lo = (k - root) / (epsilon * k)
    hi = (k + root) / (epsilon * k)
    return (lo, hi)


def deltas(params, epsilon, alpha):
    """The three certificate coefficients (delta1, delta2, delta3)."""
    if not (epsilon > 0 and alpha > 0):
        raise ValueError("epsilon and alpha must be > 0")
    k, beta = params.k, params.beta
    d1 = (beta - epsilon) / 2.0
    d2 = (-epsilon * k / 2.0 + 2.0 * beta / _PI2
          + epsilon * beta / 2.0 + 2.0 * epsilon * beta / _PI2)
    d3 = -alpha * k + epsilon / 2.0 + (epsilon * k / 2.0) * alpha * alpha
    return (d1, d2, d3)


def decay_certificate(params, epsilon, alpha, e0, h_star=0.0, h0=0.0):
    """Assemble the full certificate for a feasible (epsilon, alpha) pair.

    e0 is the initial weighted error E(0); h_star and h0 are the target and
    initial energies entering the H_max bound (default 0 when only the decay
    part is of interest).
    """
    _require_epsilon(params, epsilon)
    lo, hi = alpha_interval(params, epsilon)
    if not (lo <= alpha <= hi):
        raise ValueError(
            f"alpha={alpha} infeasible for epsilon={epsilon}: "
            f"needs alpha in [{lo}, {hi}]")
    if e0 < 0:
        raise ValueError(f"e0 must be >= 0, got {e0}")
    if h_star < 0 or h0 < 0:
        raise ValueError("h_star and h0 must be >= 0")

    k = params.k
    d1, d2, d3 = deltas(params, epsilon, alpha)
    k0 = max(1.0, 1.0 / k)
    # eps < min{1, k} gives k0*eps < 1
    m_const = (1.0 + k0 * epsilon) / (1.0 - k0 * epsilon)
    delta_rate = min(2.0 * abs(d1) / (1.0 + k0 * epsilon),
                     2.0 * abs(d2) / (k * (1.0 + k0 * epsilon)))
    c1 = 2.0 * params.beta + 4.0 * m_const * e0
    c2 = 4.0
    h_max = max(h_star, h0,
                c1 + c2 * h_star,
                c1 + c2 * h0,
                c1 + c1 * c2 + c2 * c2 * h_star)
    c1_prime = math.sqrt(max(2.0, 2.0 / k) * h_max)
    c_corr = (c1_prime * (math.sqrt(2.0) + math.sqrt(2.0 * k))
              + params.beta * math.sqrt(2.0 / k))
    return DecayCertificate(
        params=params, epsilon=epsilon, alpha=alpha,
        delta1=d1, delta2=d2, delta3=d3, k0=k0,
        m_const=m_const, delta_rate=delta_rate,
        h_star=h_star, h_max=h_max,
        c1_const=c1, c2_const=c2, c_corr=c_corr,
    )


def optimize_epsilon(params, alpha=None, e0=0.0, h_star=0.0, h0=0.0):
    """Pick the epsilon maximizing the decay rate on a fixed grid.

    The grid has EPSILON_GRID_POINTS subdivisions of the open interval
    (eta, min{1, k}); ties resolve to the lowest grid index, so the result is
    deterministic.  With alpha given, candidates are restricted to epsilons
    whose feasible gain interval contains it; with alpha omitted, the returned
    certificate uses alpha = 1/epsilon, which is always interior.
    """
    report = check_assumption2(params)
    if not report.holds:
        raise ValueError(
            f"inadmissible parameters (k={params.k}, beta={params.beta})")
    lo, hi = report.epsilon_range
    width = hi - lo
    k = params.k
    k0 = max(1.0, 1.0 / k)

    best_eps = None
    best_rate = -math.inf
    for j in range(1, EPSILON_GRID_POINTS):
        eps = lo + j * width / EPSILON_GRID_POINTS
        if eps >= hi:
            break
        if alpha is not None:
            disc = k * k - eps * eps * k
            root = math.sqrt(disc)
            if not ((k - root) / (eps * k) <= alpha <= (k + root) / (eps * k)):
                continue
        d1, d2, _ = deltas(params, eps, 1.0 if alpha is None else alpha)
        rate = min(2.0 * abs(d1) / (1.0 + k0 * eps),
                   2.0 * abs(d2) / (k * (1.0 + k0 * eps)))
        if rate > best_rate:
            best_rate = rate
            best_eps = eps
    if best_eps is None:
        raise ValueError(
            f"no feasible epsilon on the grid for alpha={alpha} "
            f"(k={params.k}, beta={params.beta})")
    use_alpha = alpha if alpha is not None else 1.0 / best_eps
    cert = decay_certificate(params, best_eps, use_alpha, e0,
                             h_star=h_star, h0=h0)
    return best_eps, cert
