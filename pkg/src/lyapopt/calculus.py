"""Convex-analysis quantities used as test oracles throughout the package.

Bregman divergences, the symmetrized divergence, and sampling-based
checkers for the classical two-sided bounds on smooth convex functions.
The checkers are certificates over samples: they can refute an inequality
but not prove it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemOracle, box_rng, sample_box

SLACK_TOL = 1e-9
SAMPLING_RADIUS = 10.0


@dataclass(frozen=True)
class DivergencePair:
    """Forward/backward Bregman divergences and their symmetrization.

    Always satisfies 2 * m_sym == d_forward + d_backward by construction.
    """

    d_forward: float
    d_backward: float
    m_sym: float


def bregman(oracle: ProblemOracle, y, x) -> DivergencePair:
    """Divergences of the smooth part h between x and y."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    gx = oracle.grad_h(x)
    gy = oracle.grad_h(y)
    d_fwd = oracle.eval_h(y) - oracle.eval_h(x) - float(np.dot(gx, y - x))
    d_bwd = oracle.eval_h(x) - oracle.eval_h(y) - float(np.dot(gy, x - y))
    m_sym = 0.5 * float(np.dot(gx - gy, x - y))
    return DivergencePair(d_forward=d_fwd, d_backward=d_bwd, m_sym=m_sym)


def _record(report, name, slack, sample, tol):
    entry = report.setdefault(
        name, {"inequality": name, "worst_slack": np.inf, "arg_worst": None, "violations": 0}
    )
    if slack < entry["worst_slack"]:
        entry["worst_slack"] = float(slack)
        entry["arg_worst"] = [float(t) for t in sample]
    if slack < -tol:
        entry["violations"] += 1


def check_bounds_lemma1(oracle: ProblemOracle, samples: int, seed: int) -> dict:
    """Sample pairs (x, y) and check the four curvature bounds on h.

    Upper bounds L/2 ||x-y||^2 on both divergences, lower bounds
    mu/2 ||x-y||^2 and ||grad diff||^2/(2L); for mu > 0 also the upper
    bound ||grad diff||^2/(2 mu).  Slack is (bound side) - (bounded side);
    a violation is slack below -1e-9 * (1 + ||x-y||^2).
    """
    rng = box_rng(seed)
    mu, lip = oracle.mu, oracle.lip
    xs = sample_box(rng, oracle.x_star, SAMPLING_RADIUS, samples)
    ys = sample_box(rng, oracle.x_star, SAMPLING_RADIUS, samples)
    report: dict = {}
    for x, y in zip(xs, ys):
        div = bregman(oracle, y, x)
        dist2 = float(np.dot(x - y, x - y))
        gdiff2 = float(np.sum((oracle.grad_h(x) - oracle.grad_h(y)) ** 2))
        tol = SLACK_TOL * (1.0 + dist2)
        big = max(div.d_forward, div.m_sym)
        small = min(div.d_forward, div.m_sym)
        _record(report, "upper_L", 0.5 * lip * dist2 - big, np.r_[x, y], tol)
        _record(report, "lower_mu", small - 0.5 * mu * dist2, np.r_[x, y], tol)
        _record(report, "lower_grad_sq", small - gdiff2 / (2.0 * lip), np.r_[x, y], tol)
        if mu > 0:
            _record(report, "upper_grad_sq", gdiff2 / (2.0 * mu) - big, np.r_[x, y], tol)
    return report


def check_minimum_bounds(oracle: ProblemOracle, samples: int, seed: int) -> dict:
    """Check the corollary bounds that pin one argument at the minimizer."""
    rng = box_rng(seed)
    mu, lip = oracle.mu, oracle.lip
    xs = sample_box(rng, oracle.x_star, SAMPLING_RADIUS, samples)
    report: dict = {}
    for x in xs:
        g = oracle.grad_h(x)
        gap = oracle.eval_h(x) - oracle.eval_h(oracle.x_star)
        d = x - oracle.x_star
        dist2 = float(np.dot(d, d))
        gnorm2 = float(np.dot(g, g))
        inner = float(np.dot(g, d))
        tol = SLACK_TOL * (1.0 + dist2)
        _record(report, "gap_lower_grad", gap - gnorm2 / (2.0 * lip), x, tol)
        _record(report, "gap_upper_dist", 0.5 * lip * dist2 - gap, x, tol)
        _record(report, "inner_lower_grad", inner - gnorm2 / lip, x, tol)
        _record(report, "inner_upper_dist", lip * dist2 - inner, x, tol)
        refined = (mu * lip / (mu + lip)) * dist2 + gnorm2 / (mu + lip)
        _record(report, "inner_refined", inner - refined, x, tol)
        if mu > 0:
            _record(report, "gap_lower_dist", gap - 0.5 * mu * dist2, x, tol)
            _record(report, "gap_upper_grad", gnorm2 / (2.0 * mu) - gap, x, tol)
            _record(report, "inner_lower_dist", inner - mu * dist2, x, tol)
            _record(report, "inner_upper_grad", gnorm2 / mu - inner, x, tol)
            _record(report, "inner_strong", inner - gap - 0.5 * mu * dist2, x, tol)
    return report


def total_violations(report: dict) -> int:
    return sum(entry["violations"] for entry in report.values())


def three_point_bound(oracle: ProblemOracle, x_k, y, x_next) -> float:
    """Upper bound on f(x_next) - f(x_k) through an intermediate point y.

    Combines the descent upper bound at y with the stronger of the two
    lower bounds between y and x_k.
    """
    x_k = np.asarray(x_k, dtype=float)
    y = np.asarray(y, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    gy = oracle.grad_h(y)
    gk = oracle.grad_h(x_k)
    lip, mu = oracle.lip, oracle.mu
    return (
        float(np.dot(gy, x_next - x_k))
        + 0.5 * lip * float(np.sum((x_next - y) ** 2))
        - max(
            0.5 * mu * float(np.sum((y - x_k) ** 2)),
            float(np.sum((gy - gk) ** 2)) / (2.0 * lip),
        )
    )


def bregman_by_quadrature(oracle: ProblemOracle, y, x, panels: int = 10_000) -> float:
    """Midpoint quadrature of the line-integral identity for D_h(y, x)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    gx = oracle.grad_h(x)
    xi = (np.arange(panels) + 0.5) / panels
    total = 0.0
    for t in xi:
        total += float(np.dot(oracle.grad_h(x + t * (y - x)) - gx, y - x))
    return total / panels
