"""Fidelity accounting and the separation figure of merit.

Assignment fidelity F_a = 1 - (P(0|1) + P(1|0))/2 from counted errors.  The
separation R = (m_0 - m_1)^2 / sigma^2 of the projected statistic maps to an
ideal-noise ceiling F_ach = 1/2 + erf(sqrt(R/8))/2; erf is implemented here
(Maclaurin series for |x| <= 3, Lentz continued fraction beyond) to at least
1e-12 absolute accuracy so the numeric core carries no special-function
dependency.  Histogram means come from a shared-sigma two-component-per-class
Gaussian mixture fit by EM, because decay events put a non-Gaussian shoulder
on the excited class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitFailedError, InvalidSpecError, UndefinedFidelityError
from .sim import Dataset

__all__ = [
    "FidelityReport",
    "DoubleGaussianFit",
    "SeparationResult",
    "SweepPoint",
    "assignment_fidelity",
    "erf",
    "achievable_fidelity",
    "fit_double_gaussian",
    "separation_R",
    "time_sweep",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Assignment fidelity


@dataclass(frozen=True)
class FidelityReport:
    f_a: float
    p01: float
    p10: float
    n0: int
    n1: int
    errors_01: int
    errors_10: int
    se_p01: float
    se_p10: float
    se_f_a: float

    def as_dict(self) -> dict:
        return {
            "f_a": self.f_a, "p01": self.p01, "p10": self.p10,
            "n0": self.n0, "n1": self.n1,
            "errors_01": self.errors_01, "errors_10": self.errors_10,
            "se_p01": self.se_p01, "se_p10": self.se_p10, "se_f_a": self.se_f_a,
        }


def assignment_fidelity(predicted: np.ndarray, truth: np.ndarray) -> FidelityReport:
    """F_a and the two conditional error rates, with binomial standard errors.

    p01 is the fraction of truth-1 shots predicted 0; p10 the mirror.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise InvalidSpecError("predictions and truth must be equal-length vectors")
    n0 = int(np.sum(truth == 0))
    n1 = int(np.sum(truth == 1))
    if n0 == 0 or n1 == 0:
        raise UndefinedFidelityError(
            f"need both truth classes, got n0={n0}, n1={n1}")
    e01 = int(np.sum((truth == 1) & (predicted == 0)))
    e10 = int(np.sum((truth == 0) & (predicted == 1)))
    p01 = e01 / n1
    p10 = e10 / n0
    se01 = math.sqrt(p01 * (1.0 - p01) / n1)
    se10 = math.sqrt(p10 * (1.0 - p10) / n0)
    return FidelityReport(
        f_a=1.0 - 0.5 * (p01 + p10), p01=p01, p10=p10, n0=n0, n1=n1,
        errors_01=e01, errors_10=e10, se_p01=se01, se_p10=se10,
        se_f_a=0.5 * math.sqrt(se01**2 + se10**2))


# ---------------------------------------------------------------------------
# erf and the achievable-fidelity map


def _erf_series(x: float) -> float:
    # sum (-1)^n x^(2n+1) / (n! (2n+1)); worst cancellation at x=3 keeps
    # ~1e-14 absolute accuracy
    s = 0.0
    c = x
    x2 = x * x
    for n in range(0, 120):
        term = c / (2 * n + 1)
        s += term if n % 2 == 0 else -term
        c *= x2 / (n + 1)
        if c / (2 * n + 3) < 1e-18:
            break
    return _TWO_OVER_SQRT_PI * s


def _erfc_cf(x: float) -> float:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated by the modified Lentz method; fast for x >= 3
    tiny = 1e-300
    f = x if x != 0.0 else tiny
    c_ = f
    d_ = 0.0
    for n in range(1, 200):
        a = 0.5 * n
        d_ = x + a * d_
        if d_ == 0.0:
            d_ = tiny
        c_ = x + a / c_
        if c_ == 0.0:
            c_ = tiny
        d_ = 1.0 / d_
        delta = c_ * d_
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x * x) / math.sqrt(math.pi) / f


def erf(x: float) -> float:
    """Error function, series + continued fraction, >= 1e-12 absolute."""
    x = float(x)
    if math.isnan(x):
        return x
    sign = 1.0 if x >= 0 else -1.0
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if ax > 6.0:
        return sign  # erfc(6) < 3e-17, below double resolution of 1
    if ax <= 3.0:
        return sign * _erf_series(ax)
    return sign * (1.0 - _erfc_cf(ax))


def achievable_fidelity(r: float) -> float:
    """Ideal-noise fidelity ceiling 1/2 + erf(sqrt(R/8))/2."""
    r = float(r)
    if r < 0 or math.isnan(r):
        raise InvalidSpecError(f"separation must be nonnegative, got {r}")
    return 0.5 + 0.5 * erf(math.sqrt(r / 8.0))


# ---------------------------------------------------------------------------
# Double-Gaussian fit and separation


@dataclass
class DoubleGaussianFit:
    """Joint fit of both classes: two components each, one shared sigma.

    m0/m1 are the dominant-component means; means/weights are (2, 2) arrays
    ordered [class, component] with the dominant component first.
    """

    m0: float
    m1: float
    sigma: float
    means: np.ndarray
    weights: np.ndarray
    uncertainties: dict
    gof: dict
    loglik: float
    loglik_history: list = field(default_factory=list)
    n_samples: tuple = (0, 0)


def _em_once(s0, s1, mu_init, sigma_init, max_iter, rtol):
    """One EM run; returns (means(2,2), weights(2,2), sigma, loglik, history)
    or None when a component collapses."""
    data = (s0, s1)
    mu = np.array(mu_init, dtype=float)
    w = np.full((2, 2), 0.5)
    sigma = float(sigma_init)
    history = []
    ll_prev = -np.inf
    n_total = s0.size + s1.size
    for _ in range(max_iter):
        ll = 0.0
        sq_sum = 0.0
        new_mu = np.zeros((2, 2))
        new_n = np.zeros((2, 2))
        for c in (0, 1):
            x = data[c]
            # responsibilities for the 2 components of this class
            z = -0.5 * ((x[:, None] - mu[c][None, :]) / sigma) ** 2
            z += np.log(w[c][None, :])
            zmax = z.max(axis=1, keepdims=True)
            p = np.exp(z - zmax)
            norm = p.sum(axis=1, keepdims=True)
            ll += float(np.sum(np.log(norm) + zmax)) \
                - x.size * math.log(sigma * math.sqrt(2 * math.pi))
            resp = p / norm
            new_n[c] = resp.sum(axis=0)
            if np.any(new_n[c] < 1e-9):
                return None
            new_mu[c] = (resp * x[:, None]).sum(axis=0) / new_n[c]
            sq_sum += float(np.sum(resp * (x[:, None] - new_mu[c][None, :]) ** 2))
        history.append(ll)
        mu = new_mu
        w = new_n / new_n.sum(axis=1, keepdims=True)
        sigma = math.sqrt(sq_sum / n_total)
        if sigma < 1e-12:
            return None
        if ll - ll_prev < rtol * (abs(ll) + 1.0) and ll >= ll_prev:
            break
        ll_prev = ll
    return mu, w, sigma, history[-1], history


def fit_double_gaussian(samples0: np.ndarray, samples1: np.ndarray,
                        bins: int = 60, restarts: int = 10,
                        max_iter: int = 500, seed: int = 0) -> DoubleGaussianFit:
    """EM fit of the class-conditional histograms, sigma shared everywhere.

    Restart initializations: moment-based first, then seeded random pairs.
    Raises FitFailedError when every restart collapses a component.
    """
    s0 = np.asarray(samples0, dtype=float).ravel()
    s1 = np.asarray(samples1, dtype=float).ravel()
    if s0.size < 100 or s1.size < 100:
        raise InvalidSpecError("need at least 100 samples per class")
    if restarts < 1:
        raise InvalidSpecError("restarts must be >= 1")

    rng = np.random.default_rng(seed)
    pooled_std = float(np.std(np.concatenate([s0, s1])))
    if pooled_std == 0.0:
        raise FitFailedError("all samples identical")

    best = None
    for r in range(restarts):
        if r == 0:
            init = [np.quantile(s0, [0.5, 0.05]), np.quantile(s1, [0.5, 0.95])]
            sig0 = 0.5 * (np.std(s0) + np.std(s1))
        else:
            init = [rng.choice(s0, 2, replace=False),
                    rng.choice(s1, 2, replace=False)]
            sig0 = pooled_std * rng.uniform(0.2, 1.0)
        got = _em_once(s0, s1, init, sig0, max_iter, rtol=1e-12)
        if got is None:
            continue
        if best is None or got[3] > best[3]:
            best = got
    if best is None:
        raise FitFailedError(f"all {restarts} EM restarts degenerated")

    mu, w, sigma, ll, history = best
    # dominant component first within each class
    order = np.argsort(-w, axis=1)
    mu = np.take_along_axis(mu, order, axis=1)
    w = np.take_along_axis(w, order, axis=1)

    n_eff = np.array([[w[c, j] * (s0.size if c == 0 else s1.size)
                       for j in (0, 1)] for c in (0, 1)])
    uncertainties = {
        "m0": sigma / math.sqrt(max(n_eff[0, 0], 1.0)),
        "m1": sigma / math.sqrt(max(n_eff[1, 0], 1.0)),
        "sigma": sigma / math.sqrt(2.0 * (s0.size + s1.size)),
    }
    gof = _mixture_chisq((s0, s1), mu, w, sigma, bins)
    return DoubleGaussianFit(m0=float(mu[0, 0]), m1=float(mu[1, 0]),
                             sigma=float(sigma), means=mu, weights=w,
                             uncertainties=uncertainties, gof=gof,
                             loglik=float(ll), loglik_history=history,
                             n_samples=(s0.size, s1.size))


def _normal_cdf(x: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.array([0.5 * (1.0 + erf((v - mu) / (sigma * math.sqrt(2.0))))
                     for v in np.atleast_1d(x)])


def _mixture_chisq(data, mu, w, sigma, bins):
    """Pearson chi-square of each class histogram against its fitted mixture;
    bins with expected count < 5 are excluded (documented)."""
    chisq = 0.0
    used = 0
    for c in (0, 1):
        x = data[c]
        counts, edges = np.histogram(x, bins=bins)
        expected = np.zeros(bins)
        for j in (0, 1):
            cdf = _normal_cdf(edges, mu[c, j], sigma)
            expected += w[c, j] * np.diff(cdf)
        expected *= x.size
        ok = expected >= 5.0
        chisq += float(np.sum((counts[ok] - expected[ok]) ** 2 / expected[ok]))
        used += int(np.sum(ok))
    dof = max(used - 7 - 2, 1)  # 4 means + 2 weights + 1 sigma, 2 normalizations
    return {"chisq": chisq, "dof": dof, "reduced": chisq / dof}


@dataclass(frozen=True)
class SeparationResult:
    r: float
    uncertainty: float
    f_ach: float


def separation_R(fit, m1: float | None = None,
                 sigma: float | None = None,
                 uncertainties: dict | None = None) -> SeparationResult:
    """R = (m0 - m1)^2 / sigma^2 with first-order error propagation.

    Accepts a DoubleGaussianFit or the three scalars (m0, m1, sigma).
    """
    if isinstance(fit, DoubleGaussianFit):
        m0, m1_, sig = fit.m0, fit.m1, fit.sigma
        unc = fit.uncertainties
    else:
        if m1 is None or sigma is None:
            raise InvalidSpecError("scalar form needs m0, m1 and sigma")
        m0, m1_, sig = float(fit), float(m1), float(sigma)
        unc = uncertainties or {}
    if not sig > 0:
        raise InvalidSpecError(f"sigma must be positive, got {sig}")
    delta = m0 - m1_
    r = delta**2 / sig**2
    dm0 = 2.0 * delta / sig**2
    dsig = -2.0 * delta**2 / sig**3
    u = math.sqrt((dm0 * unc.get("m0", 0.0))**2
                  + (dm0 * unc.get("m1", 0.0))**2
                  + (dsig * unc.get("sigma", 0.0))**2)
    return SeparationResult(r=float(r), uncertainty=float(u),
                            f_ach=achievable_fidelity(r))


# ---------------------------------------------------------------------------
# Measurement-time sweep


@dataclass(frozen=True)
class SweepPoint:
    requested_time: float
    actual_time: float
    n_bins: int
    report: FidelityReport


def time_sweep(dataset: Dataset, recipe, times) -> list[SweepPoint]:
    """Truncate, retrain from scratch, evaluate; one point per requested time.

    ``recipe`` is any callable mapping a Dataset to a FidelityReport.  Times
    snap to the nearest bin edge.
    """
    times = list(times)
    if not times:
        raise InvalidSpecError("empty truncation list")
    grid = dataset.grid
    out = []
    for t in times:
        if not 0 < t <= grid.total_time * (1 + 1e-9):
            raise InvalidSpecError(
                f"truncation {t} outside (0, {grid.total_time}]")
        n_bins = min(max(int(round(t / grid.dt)), 1), grid.n_points)
        report = recipe(dataset.truncated(n_bins))
        out.append(SweepPoint(requested_time=float(t),
                              actual_time=n_bins * grid.dt,
                              n_bins=n_bins, report=report))
    return out
