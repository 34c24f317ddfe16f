"""Closed-form and semi-closed-form outage probability.

Four routes to the same quantity, used to cross-validate each other:

* :func:`op_exact` - the closed-form expansion: the first-hop Gamma CDF
  and the loop-interference integral are reduced analytically, the
  ordered user-gain density is expanded through power-series
  coefficients, and what remains is a finite alternating sum of
  one-dimensional tail integrals (:func:`tail_weight_integral`).
* :func:`op_oracle_2d` - direct adaptive 2-D quadrature of the outage
  probability over (user gain, loop-interference gain), mapped onto the
  unit square.  Slow but nearly assumption-free; the reference oracle.
* :func:`op_lower_bound` - fully closed form obtained by bounding the
  two-hop SIDNR by the smaller of the per-hop ratios.
* :func:`op_asymptotic` - high-SNR behavior: diversity order and array
  gain when the outage decays, explicit floor values when residual loop
  interference (full cancellation quality lost) or channel estimation
  errors dominate.

The alternating sums are accumulated with exact compensated summation
(``math.fsum``) after scaling by the largest term, and the evaluation
reports catastrophic cancellation instead of returning digits it cannot
back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc

from .config import (
    DerivedConstants,
    SystemConfig,
    derive_constants,
    uniform_ru,
)
from .specfun import gamma_pdf, multinomial_coeffs, ordered_sf

__all__ = [
    "NumericsError",
    "AsymptoteReport",
    "op_exact",
    "op_exact_from_constants",
    "op_oracle_2d",
    "op_lower_bound",
    "op_asymptotic",
    "cee_floor",
    "tail_weight_integral",
]

_TIE_TOL = 1e-9
_QUAD_LIMIT = 200


class NumericsError(RuntimeError):
    """Quadrature non-convergence or catastrophic cancellation."""


def _check_user(dc: DerivedConstants, user: int):
    if not 1 <= user <= dc.cfg.num_users:
        raise ValueError(f"user must lie in 1..{dc.cfg.num_users}")


# -- tail integral ----------------------------------------------------------

def _log_tail_weight(p, rate, inv_rate, shift, shift_power, rel_tol):
    """log of integral_0^inf x**p exp(-rate*x - inv_rate/x) (x+shift)**-shift_power dx.

    Evaluated on the log axis (x = e^w), where the integrand is a smooth
    bump: the essential zero at the origin and the exponential decay at
    infinity become double-exponential falloffs, and any slowly varying
    middle section has finite width.  The integrand is scaled by its peak
    (located by a coarse scan) and split there, so the adaptive
    quadrature always works near unit magnitude.
    """
    ws = np.linspace(-60.0, 45.0, 841)
    xs = np.exp(ws)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        phi = (p + 1) * ws - rate * xs - shift_power * np.log(xs + shift)
        if inv_rate > 0:
            phi -= inv_rate / xs
    phi = np.where(np.isfinite(phi), phi, -np.inf)
    peak = int(np.argmax(phi))
    phi_max = float(phi[peak])
    if not np.isfinite(phi_max):
        return -math.inf
    w_star = float(ws[peak])

    def f(w):
        if w > 700.0:
            return 0.0
        x = math.exp(w)
        if x == 0.0:
            return 0.0
        e = (p + 1) * w - rate * x - shift_power * math.log(x + shift) - phi_max
        if inv_rate > 0.0:
            e -= inv_rate / x
        return math.exp(e) if e > -745.0 else 0.0

    lo = quad(f, -np.inf, w_star, epsabs=0.0, epsrel=rel_tol, limit=_QUAD_LIMIT, full_output=1)
    hi = quad(f, w_star, np.inf, epsabs=0.0, epsrel=rel_tol, limit=_QUAD_LIMIT, full_output=1)
    total = lo[0] + hi[0]
    err = lo[1] + hi[1]
    if total <= 0.0:
        return -math.inf
    if err > 1e-6 * total:
        raise NumericsError(
            f"tail integral did not converge (p={p}, rate={rate:g}, "
            f"inv_rate={inv_rate:g}, estimated relative error {err / total:.2e})"
        )
    return phi_max + math.log(total)


def tail_weight_integral(
    power: int,
    rate: float,
    inv_rate: float,
    shift: float,
    shift_power: int,
    rel_tol: float = 1e-12,
) -> float:
    """integral_0^inf x**power exp(-rate*x - inv_rate/x) (x+shift)**-shift_power dx.

    ``power`` may be negative; ``inv_rate > 0`` then keeps the origin
    integrable.  With ``inv_rate == 0`` the caller must ensure
    integrability at 0 (``power >= 0`` or ``power > shift_power - 1``
    when ``shift == 0``).
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if inv_rate < 0 or shift < 0:
        raise ValueError("inv_rate and shift must be non-negative")
    return math.exp(_log_tail_weight(power, rate, inv_rate, shift, shift_power, rel_tol))


# -- exact outage -----------------------------------------------------------

@lru_cache(maxsize=128)
def _term_table(k1: int, k2: int, num_users: int, order: int, m_li: int):
    """Index arrays and index-only log weights of the outage expansion.

    Rows enumerate (n, m, s, s1, n1, n2, n3): first-hop CDF term n,
    loop-interference binomial m, the two order-statistic indices
    (s, s1), the power-series order n1 and the two shift binomials
    (n2, n3).  Everything that does not depend on the channel constants
    is folded into ``base_log``.
    """
    L, l = num_users, order
    log_theta = {
        s1: np.log(multinomial_coeffs(s1, k2).coeffs) for s1 in range(L)
    }
    rank = math.lgamma(L + 1) - math.lgamma(L - l + 1) - math.lgamma(l)

    rows_n, rows_m, rows_s1 = [], [], []
    pow_beta, pow_c, pow_u, p_exp, m_exp = [], [], [], [], []
    base, sign = [], []
    for n in range(k1):
        for m in range(n + 1):
            for s in range(L - l + 1):
                for s1 in range(l + s):
                    lth = log_theta[s1]
                    for n1 in range(s1 * (k2 - 1) + 1):
                        for n2 in range(n1 + k2):
                            for n3 in range(n + 1):
                                b = (
                                    rank
                                    + _log_comb(n, m)
                                    + _log_comb(L - l, s)
                                    + _log_comb(l + s - 1, s1)
                                    + _log_comb(n1 + k2 - 1, n2)
                                    + _log_comb(n, n3)
                                    + math.lgamma(m + m_li)
                                    - math.lgamma(n + 1)
                                    - math.lgamma(m_li)
                                    - math.lgamma(k2)
                                    + lth[n1]
                                )
                                base.append(b)
                                sign.append(-1.0 if (s + s1) % 2 else 1.0)
                                rows_n.append(n)
                                rows_m.append(m)
                                rows_s1.append(s1)
                                pow_beta.append(n1 + k2)
                                pow_c.append(n1 + k2 - 1 - n2)
                                pow_u.append(n - n3)
                                p_exp.append(n2 + n3 + m + m_li - n)
                                m_exp.append(m + m_li)

    arr = lambda v, dt=np.int64: np.asarray(v, dtype=dt)
    p_exp = arr(p_exp)
    rows_s1 = arr(rows_s1)
    m_exp = arr(m_exp)
    keys = np.stack([p_exp, rows_s1, m_exp], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    return {
        "base": arr(base, float),
        "sign": arr(sign, float),
        "n": arr(rows_n),
        "m": arr(rows_m),
        "s1": arr(rows_s1),
        "pow_beta": arr(pow_beta),
        "pow_c": arr(pow_c),
        "pow_u": arr(pow_u),
        "p": p_exp,
        "M": m_exp,
        "uniq": uniq,
        "inverse": inverse,
    }


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _success_probability(dc: DerivedConstants, user: int, rel_tol: float):
    """Complement of the outage: the alternating finite sum, returned as
    (value, largest term magnitude)."""
    cfg = dc.cfg
    l, L = user, cfg.num_users
    m_ru, power_ru_est = uniform_ru(dc)
    k1 = cfg.m_sr * cfg.tx_antennas
    k2 = m_ru * cfg.rx_antennas
    g = dc.snr_lin
    t2 = float(dc.noise_ru[l - 1])
    t3, t4, t5 = dc.rhi_amp, dc.sr_derate, dc.noise_sr
    dmax = float(dc.demand_peak[l - 1])

    beta = m_ru / power_ru_est
    alpha1 = cfg.m_sr / dc.power_sr_est
    rho = cfg.m_li / dc.power_li
    c = t2 * t3 * dmax                   # ordered-gain floor of the outage region
    e_big = t3 * t5 * dmax * alpha1      # first-hop exponential weight
    u = c + t2 / g
    q = e_big * u                        # exp(-q/x) weight inside the tail integral
    g_d = g * t3 * t4 * dmax * alpha1    # loop-interference coupling
    shift = g_d * u / (g_d + rho)

    tab = _term_table(k1, k2, L, l, cfg.m_li)
    log_c, log_u = math.log(c), math.log(u)
    log_beta = math.log(beta)
    log_g45 = math.log(g * t4 / t5)
    log_e = math.log(e_big)
    log_gd_rho = math.log(g_d + rho)
    scalar = cfg.m_li * math.log(rho) - e_big

    uniq = tab["uniq"]
    log_t = np.empty(len(uniq))
    for i, (p, s1, mm) in enumerate(uniq):
        log_t[i] = _log_tail_weight(int(p), beta * (s1 + 1), q, shift, int(mm), rel_tol)

    lg = (
        tab["base"]
        + scalar
        + tab["pow_beta"] * log_beta
        + tab["pow_c"] * log_c
        - (c * beta) * (tab["s1"] + 1)
        + tab["m"] * log_g45
        + tab["n"] * log_e
        + tab["pow_u"] * log_u
        - tab["M"] * log_gd_rho
        + log_t[tab["inverse"]]
    )
    lg_max = float(np.max(lg))
    if lg_max == -math.inf:
        return 0.0, 0.0
    terms = tab["sign"] * np.exp(lg - lg_max)
    scaled = math.fsum(terms)
    peak = math.exp(lg_max)
    return peak * scaled, peak


def op_exact_from_constants(
    dc: DerivedConstants, user: int, *, rel_tol: float = 1e-12
) -> float:
    """Exact outage probability from precomputed constants."""
    _check_user(dc, user)
    if not dc.feasible[user - 1]:
        return 1.0
    success, peak = _success_probability(dc, user, rel_tol)
    op = 1.0 - success
    if success > 1.001:
        raise NumericsError(f"success probability evaluated to {success!r}")
    # The sum itself is exactly rounded; what limits the result is the
    # per-term evaluation error (dominated by the tail-integral
    # tolerance) amplified by cancellation against the leading 1.
    err_est = peak * 1e-12
    if err_est > 0.05 * max(abs(op), 1e-300):
        raise NumericsError(
            f"catastrophic cancellation: outage {op:.3e} below the "
            f"resolution {err_est:.3e} of the alternating sum"
        )
    return min(max(op, 0.0), 1.0)


def op_exact(cfg: SystemConfig, user: int, *, rel_tol: float = 1e-12) -> float:
    """Exact per-user outage probability (closed form plus tail quadrature).

    Returns 1 outright when any decode stage of ``user`` is infeasible.
    """
    return op_exact_from_constants(derive_constants(cfg), user, rel_tol=rel_tol)


# -- 2-D quadrature oracle --------------------------------------------------

def _os_cdf_direct(x, order, num_users, shape, scale):
    """Order-statistic CDF straight from the binomial mixing of the
    underlying Gamma CDF (independent of the power-series route)."""
    F = gammainc(shape, max(x, 0.0) / scale)
    return math.fsum(
        math.comb(num_users, j) * F ** j * (1.0 - F) ** (num_users - j)
        for j in range(order, num_users + 1)
    )


def _os_pdf_direct(x, order, num_users, shape, scale):
    if x <= 0.0:
        return 0.0
    F = gammainc(shape, x / scale)
    l, n = order, num_users
    q = math.factorial(n) / (math.factorial(n - l) * math.factorial(l - 1))
    return q * F ** (l - 1) * (1.0 - F) ** (n - l) * gamma_pdf(x, shape, scale)


def op_oracle_2d(
    cfg: SystemConfig,
    user: int,
    *,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-13,
) -> float:
    """Reference outage value by direct 2-D quadrature.

    The outage region is the union of {ordered user gain below its floor}
    and, above the floor, {first-hop gain below the level forced by the
    user and loop-interference gains}.  Both axes are mapped onto (0, 1)
    with t/(1-t) substitutions and integrated adaptively.
    """
    dc = derive_constants(cfg)
    _check_user(dc, user)
    if not dc.feasible[user - 1]:
        return 1.0
    cfgc = dc.cfg
    l, L = user, cfgc.num_users
    m_ru, power_ru_est = uniform_ru(dc)
    k1 = cfgc.m_sr * cfgc.tx_antennas
    k2 = m_ru * cfgc.rx_antennas
    scale1 = dc.power_sr_est / cfgc.m_sr
    scale2 = power_ru_est / m_ru
    scale3 = dc.power_li / cfgc.m_li
    g = dc.snr_lin
    t2 = float(dc.noise_ru[l - 1])
    t3, t4, t5 = dc.rhi_amp, dc.sr_derate, dc.noise_sr
    dmax = float(dc.demand_peak[l - 1])
    c = t2 * t3 * dmax

    head = _os_cdf_direct(c, l, L, k2, scale2)

    def inner(s, y):
        z = s / (1.0 - s)
        need = (y * g + t2) * (z * g * t4 + t5) * t3 * dmax / (g * (y - c))
        return (
            gammainc(k1, need / scale1)
            * gamma_pdf(z, cfgc.m_li, scale3)
            / (1.0 - s) ** 2
        )

    def outer(t):
        y = c + t / (1.0 - t)
        w = _os_pdf_direct(y, l, L, k2, scale2)
        if w <= 0.0:
            return 0.0
        val, _ = quad(
            inner, 0.0, 1.0, args=(y,), epsabs=abs_tol, epsrel=rel_tol,
            limit=_QUAD_LIMIT,
        )
        return val * w / (1.0 - t) ** 2

    body = quad(
        outer, 0.0, 1.0, epsabs=abs_tol, epsrel=rel_tol, limit=_QUAD_LIMIT,
        full_output=1,
    )
    if body[1] > max(abs_tol, 1e-4 * abs(body[0])) * 100:
        raise NumericsError(
            f"outage quadrature did not converge (estimate {body[0]:.3e}, "
            f"error {body[1]:.3e})"
        )
    return min(head + body[0], 1.0)


# -- closed-form lower bound ------------------------------------------------

def _relay_ratio_sf(x, dc: DerivedConstants):
    """Survival of W = snr*g1 / (snr*g3 + noise_sr/sr_derate), closed form.

    All terms are positive, so plain summation is stable.
    """
    cfg = dc.cfg
    k1 = cfg.m_sr * cfg.tx_antennas
    alpha1 = cfg.m_sr / dc.power_sr_est
    rho = cfg.m_li / dc.power_li
    v = dc.noise_sr / (dc.snr_lin * dc.sr_derate)
    if x <= 0.0:
        return 1.0
    lead = math.exp(-x * v * alpha1) if x * v * alpha1 < 745 else 0.0
    if lead == 0.0:
        return 0.0
    terms = []
    for n in range(k1):
        for n2 in range(n + 1):
            terms.append(
                math.comb(n, n2)
                * rho ** cfg.m_li
                * alpha1 ** n
                * math.exp(math.lgamma(n2 + cfg.m_li) - math.lgamma(n + 1) - math.lgamma(cfg.m_li))
                * v ** (n - n2)
                * x ** n
                * (x * alpha1 + rho) ** (-(n2 + cfg.m_li))
            )
    return lead * math.fsum(terms)


def op_lower_bound(cfg: SystemConfig, user: int) -> float:
    """Closed-form lower bound on the exact outage.

    The two-hop SIDNR is upper-bounded by the minimum of the per-hop
    ratios (the harmonic-mean property), whose survival factorizes into
    the relay-ratio survival and the ordered-gain survival.
    """
    dc = derive_constants(cfg)
    _check_user(dc, user)
    if not dc.feasible[user - 1]:
        return 1.0
    l, L = user, cfg.num_users
    m_ru, power_ru_est = uniform_ru(dc)
    k2 = m_ru * cfg.rx_antennas
    scale2 = power_ru_est / m_ru
    dmax = float(dc.demand_peak[l - 1])
    t2 = float(dc.noise_ru[l - 1])
    x_w = dc.snr_lin * dc.rhi_amp * dc.sr_derate * dmax
    s_w = _relay_ratio_sf(x_w, dc)
    s_2 = ordered_sf(t2 * dc.rhi_amp * dmax, l, L, k2, scale2)
    return min(max(1.0 - s_w * s_2, 0.0), 1.0)


# -- asymptotics ------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoteReport:
    """High-SNR characterization of a user's outage curve.

    ``regime`` is one of ``ideal`` (outage decays as
    ``(array_gain * snr) ** -diversity_order``), ``li_floor`` (loop
    interference scales with transmit power, outage saturates) or
    ``cee_floor`` (channel estimation errors dominate, outage
    saturates); ``infeasible`` marks a configuration whose outage is 1.
    ``hop1_gain``/``hop2_gain`` are the per-hop gain coefficients whose
    minimum-diversity branch sets ``array_gain``.
    """

    user: int
    regime: str
    diversity_order: float
    array_gain: float | None
    floor_value: float | None
    hop1_gain: float | None = None
    hop2_gain: float | None = None

    def probability(self, snr_lin: float) -> float:
        """Asymptotic outage at the given linear average SNR."""
        if self.regime == "ideal":
            return min((self.array_gain * snr_lin) ** (-self.diversity_order), 1.0)
        return self.floor_value


def cee_floor(cfg: SystemConfig, user: int, *, snr_ref_db: float = 60.0) -> float:
    """Outage floor under channel estimation errors.

    At high SNR the effective noise terms grow linearly with power, so
    the exact expression stops depending on the SNR; it is evaluated at a
    large reference SNR with the noise terms replaced by their
    power-proportional parts (a hop with zero error variance keeps its
    exact noise term).
    """
    if cfg.sigma_e_sr_sq == 0.0 and cfg.sigma_e_ru_sq == 0.0:
        raise ValueError("cee_floor requires a non-zero estimation error variance")
    ref = replace(cfg, snr_db=snr_ref_db)
    dc = derive_constants(ref)
    g = dc.snr_lin
    noise_ru = dc.noise_ru
    noise_sr = dc.noise_sr
    if cfg.sigma_e_ru_sq > 0.0:
        noise_ru = np.full(cfg.num_users, g * cfg.sigma_e_ru_sq)
    if cfg.sigma_e_sr_sq > 0.0:
        noise_sr = g * cfg.sigma_e_sr_sq
    dc = replace(dc, noise_ru=noise_ru, noise_sr=noise_sr)
    return op_exact_from_constants(dc, user)


def op_asymptotic(cfg: SystemConfig, user: int) -> AsymptoteReport:
    """Diversity order, array gain and floor levels for ``user``.

    Independent of ``cfg.snr_db``: use :meth:`AsymptoteReport.probability`
    to evaluate the asymptotic curve at any SNR.
    """
    dc = derive_constants(cfg)
    _check_user(dc, user)
    l = user
    if not dc.feasible[l - 1]:
        return AsymptoteReport(
            user=l, regime="infeasible", diversity_order=0.0, array_gain=None,
            floor_value=1.0,
        )
    if cfg.sigma_e_sr_sq > 0.0 or cfg.sigma_e_ru_sq > 0.0:
        return AsymptoteReport(
            user=l, regime="cee_floor", diversity_order=0.0, array_gain=None,
            floor_value=cee_floor(cfg, l),
        )

    lam = float(dc.demand_peak[l - 1]) * dc.snr_lin  # SNR-free demand level
    hop2_amp = 1.0 + cfg.kappa_sr ** 2
    hop1_amp = 1.0 + cfg.kappa_ru ** 2
    m_ru, _ = uniform_ru(dc)
    k1 = cfg.m_sr * cfg.tx_antennas
    k2 = m_ru * cfg.rx_antennas

    if cfg.li_quality_mu == 1.0:
        # Loop interference grows with transmit power: the first hop
        # saturates and sets a floor shared by the whole curve.  The
        # residual interference power is SNR-free here (scale * snr**0).
        x = hop1_amp * lam
        floor = 1.0 - _relay_ratio_sf_ideal(x, dc)
        return AsymptoteReport(
            user=l, regime="li_floor", diversity_order=0.0, array_gain=None,
            floor_value=floor,
        )

    do1 = (1.0 - cfg.li_quality_mu) * k1
    do2 = k2 * l
    log_d1 = (
        math.lgamma(k1 + cfg.m_li)
        - math.lgamma(k1 + 1)
        - math.lgamma(cfg.m_li)
        + k1 * math.log(hop1_amp * lam * cfg.m_sr * cfg.li_scale_lambda / (dc.power_sr * cfg.m_li))
    )
    chi1 = math.exp(-log_d1 / do1)
    log_d2 = _log_comb(cfg.num_users, l) - l * math.lgamma(k2 + 1)
    chi2 = math.exp(-log_d2 / do2) * float(dc.power_ru[l - 1]) / (hop2_amp * lam * m_ru)
    if abs(do1 - do2) <= _TIE_TOL:
        do, ag = do1, chi1 + chi2
    elif do1 < do2:
        do, ag = do1, chi1
    else:
        do, ag = do2, chi2
    return AsymptoteReport(
        user=l, regime="ideal", diversity_order=do, array_gain=ag,
        floor_value=None, hop1_gain=chi1, hop2_gain=chi2,
    )


def _relay_ratio_sf_ideal(x, dc: DerivedConstants):
    """Survival of g1/g3 at level x: the li_floor building block."""
    cfg = dc.cfg
    k1 = cfg.m_sr * cfg.tx_antennas
    alpha1 = cfg.m_sr / dc.power_sr
    rho = cfg.m_li / dc.power_li
    terms = [
        rho ** cfg.m_li
        * math.exp(math.lgamma(n + cfg.m_li) - math.lgamma(n + 1) - math.lgamma(cfg.m_li))
        * (x * alpha1) ** n
        * (x * alpha1 + rho) ** (-(n + cfg.m_li))
        for n in range(k1)
    ]
    return math.fsum(terms)
