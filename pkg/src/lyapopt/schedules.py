"""Parameter sequences for the accelerated methods.

The scaling factor gamma follows the implicit-Euler recursion
gamma_{k+1} = (gamma_k + alpha_k * mu) / (1 + alpha_k); each accelerated
method couples it with its own step-size rule.  The contraction factor
rho_k = prod 1/(1 + alpha_i) admits closed-form min{sublinear, linear}
bounds, implemented here per rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ScheduleError(ValueError):
    """Invalid schedule parameters (nonpositive inputs, gamma0 < mu...)."""


class UnsupportedParameterError(ScheduleError):
    """Parameter range not covered by any closed-form bound (B in (0, 1/2))."""


@dataclass
class ScheduleState:
    k: int
    gamma: float
    alpha: float
    rho: float
    t_scaled: float
    beta: float = 0.0


def gamma_step(gamma_k: float, alpha_k: float, mu: float) -> float:
    """One implicit-Euler step of gamma' = mu - gamma."""
    if gamma_k <= 0 or alpha_k <= 0 or mu < 0:
        raise ScheduleError("gamma_step needs gamma_k > 0, alpha_k > 0, mu >= 0")
    return (gamma_k + alpha_k * mu) / (1.0 + alpha_k)


def gamma_closed_form(gamma0: float, mu: float, t_seq) -> float:
    """Closed form of gamma_k in terms of the rescaled steps t_i = alpha_i/gamma_i.

    For mu = 0 the product formula degenerates to 1/(1/gamma0 + sum t_i).
    """
    if gamma0 <= 0 or mu < 0:
        raise ScheduleError("gamma_closed_form needs gamma0 > 0, mu >= 0")
    t_seq = np.asarray(t_seq, dtype=float)
    if mu == 0.0:
        return gamma0 / (1.0 + gamma0 * float(t_seq.sum()))
    # accumulate in log space so the product stays accurate when mu is tiny
    # and cannot overflow for long sequences; with s = sum log(1 + t_i mu),
    # gamma_k = gamma0 / (e^-s + gamma0 (1 - e^-s) / mu)
    log_prod = float(np.sum(np.log1p(t_seq * mu)))
    decay = math.exp(-log_prod)
    return gamma0 / (decay + gamma0 * (-math.expm1(-log_prod)) / mu)


def solve_alpha_quadratic(gamma_k: float, lip: float, b_coef: float) -> float:
    """Positive root of L a^2 = gamma (1 + B a)."""
    if gamma_k <= 0 or lip <= 0 or b_coef < 0:
        raise ScheduleError("need gamma_k > 0, lip > 0, b_coef >= 0")
    bg = b_coef * gamma_k
    return (bg + math.sqrt(bg * bg + 4.0 * lip * gamma_k)) / (2.0 * lip)


def nag_alpha(gamma_k: float, lip: float) -> float:
    """Root of L a^2 = gamma (2 + a)."""
    return (gamma_k + math.sqrt(gamma_k * gamma_k + 8.0 * lip * gamma_k)) / (2.0 * lip)


def apg_alpha(gamma_k: float, lip: float) -> float:
    """a = sqrt(gamma / L)."""
    return math.sqrt(gamma_k / lip)


def new_apg_alpha(gamma_k: float, lip: float) -> float:
    """Root of L a^2 = gamma (1 + a)."""
    return solve_alpha_quadratic(gamma_k, lip, 1.0)


def fast_grad_alpha(gamma_k: float, lip: float) -> float:
    """a = sqrt(gamma / (4L))."""
    return math.sqrt(gamma_k / (4.0 * lip))


STEP_RULES = {
    "nag": nag_alpha,
    "apg": apg_alpha,
    "new_apg": new_apg_alpha,
    "fast_grad": fast_grad_alpha,
}


def momentum_alpha(mu: float, lip: float, variant: str = "sqrt") -> float:
    """Constant momentum step satisfying L a^2 <= mu (1 + a)."""
    if not 0 < mu <= lip:
        raise ScheduleError("momentum needs 0 < mu <= lip")
    if variant == "sqrt":
        return math.sqrt(mu / lip)
    if variant == "root":
        return (mu + math.sqrt(mu * mu + 4.0 * lip * mu)) / (2.0 * lip)
    raise ScheduleError(f"unknown momentum variant: {variant!r}")


def avd_alpha(gamma_k: float, lip: float) -> float:
    """Positive root of L a^2 = 1 + a sqrt(gamma); always >= 1/sqrt(L)."""
    if gamma_k < 0 or lip <= 0:
        raise ScheduleError("need gamma_k >= 0, lip > 0")
    sg = math.sqrt(gamma_k)
    return (sg + math.sqrt(gamma_k + 4.0 * lip)) / (2.0 * lip)


def _sublinear_b0(r: float, k: int) -> float:
    # each step grows 1/sqrt(rho) by at least sqrt(r)/(1 + sqrt(1 + a))
    # with a <= sqrt(r); for r >= 1 the looser a <= r gives the same form
    c = 1.0 + math.sqrt(1.0 + max(r, math.sqrt(r)))
    return (c / (c + math.sqrt(r) * k)) ** 2


def _sublinear_bhalf(r: float, k: int) -> float:
    return (2.0 / (2.0 + math.sqrt(r) * k)) ** 2


def _sublinear_nag(r: float, k: int) -> float:
    s2 = math.sqrt(2.0)
    return (s2 / (s2 + math.sqrt(r) * k)) ** 2


def _linear(mu_over_l: float, k: int, factor: float = 1.0) -> float:
    return (1.0 + math.sqrt(factor * mu_over_l)) ** (-k)


def rho_bound(rule: str, gamma0: float, mu: float, lip: float, k: int) -> float:
    """Closed-form min{sublinear, linear} bound on rho_k for the named rule.

    Requires gamma0 = r * lip >= mu (hypothesis of the bounds).  The fast-gradient
    rule a = sqrt(gamma/(4L)) is the B = 0 rule with L replaced by 4L, which
    reproduces its stated bound exactly.
    """
    if gamma0 <= 0 or lip <= 0 or mu < 0 or k < 0:
        raise ScheduleError("invalid rho_bound parameters")
    if gamma0 < mu:
        raise ScheduleError("accelerated bounds require gamma0 >= mu")
    r = gamma0 / lip
    q = mu / lip
    if rule in ("b0", "apg"):
        return min(_sublinear_b0(r, k), _linear(q, k))
    if rule in ("b_half", "new_apg"):
        return min(_sublinear_bhalf(r, k), _linear(q, k))
    if rule == "nag":
        return min(_sublinear_nag(r, k), _linear(q, k, factor=2.0))
    if rule == "fast_grad":
        return min(_sublinear_b0(gamma0 / (4.0 * lip), k), _linear(q / 4.0, k))
    if rule == "momentum":
        return _linear(q, k)
    raise ScheduleError(f"unknown rate rule: {rule!r}")


def rho_bound_for_b(b_coef: float, gamma0: float, mu: float, lip: float, k: int) -> float:
    """Generic-B bound; only B = 0 and B >= 1/2 are covered by the theory."""
    if b_coef == 0.0:
        return rho_bound("b0", gamma0, mu, lip, k)
    if b_coef >= 0.5:
        return rho_bound("b_half", gamma0, mu, lip, k)
    raise UnsupportedParameterError(
        "no closed-form rho bound is proved for B in (0, 1/2)"
    )


def avd_gamma_bound(r: float, k: int) -> float:
    """Bound on gamma_k / gamma0 for the vanishing-damping scheme, r = gamma0/L."""
    if r <= 0 or k < 0:
        raise ScheduleError("need r > 0, k >= 0")
    sr = math.sqrt(r)
    return (1.0 + sr / (2.0 + sr)) ** 2 * (2.0 / (2.0 + sr * k)) ** 2


def iterate_schedule(rule: str, gamma0: float, mu: float, lip: float, k_max: int):
    """Run the coupled (gamma, alpha) recursion; returns alphas, gammas, rhos.

    gammas and rhos have length k_max + 1 (including index 0), alphas k_max.
    """
    if rule not in STEP_RULES:
        raise ScheduleError(f"unknown step rule: {rule!r}")
    alpha_fn = STEP_RULES[rule]
    gammas = np.empty(k_max + 1)
    rhos = np.empty(k_max + 1)
    alphas = np.empty(k_max)
    gammas[0] = gamma0
    rhos[0] = 1.0
    for k in range(k_max):
        a = alpha_fn(gammas[k], lip)
        alphas[k] = a
        gammas[k + 1] = gamma_step(gammas[k], a, mu)
        rhos[k + 1] = rhos[k] / (1.0 + a)
    return alphas, gammas, rhos
