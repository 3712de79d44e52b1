"""Monte Carlo estimates of small-time probabilities and inequality checks.

Every estimate is a sample proportion with its binomial standard error;
probability comparisons use 3 standard errors of slack and characteristic
function moduli use a 4/sqrt(N) band.  Aggregations run over paths in a fixed
order with compensated summation, so results are deterministic given
(master seed, spec, grid, window).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import LevyOnlyError
from .measures import MeasureSpec
from .norming import ball_extremum, u_of_R, u_inverse
from .simulate import PathEnsemble
from .symbols import DEFAULT_CONFIG, QuadratureConfig, SymbolFamily, tail_mass


@dataclass(frozen=True)
class ProbabilityEstimate:
    """Sample proportion with binomial standard error."""

    p_hat: float
    standard_error: float
    sample_size: int

    @classmethod
    def from_count(cls, count: int, n: int) -> "ProbabilityEstimate":
        if n <= 0:
            raise ValueError("empty ensemble")
        p = count / n
        return cls(p_hat=p, standard_error=math.sqrt(p * (1.0 - p) / n), sample_size=n)

    def to_dict(self):
        return {"p_hat": self.p_hat, "standard_error": self.standard_error,
                "sample_size": self.sample_size}


def estimate_sup_probability(ensemble: PathEnsemble, t: float, R: float,
                             direction: str = "ge") -> ProbabilityEstimate:
    """P^x(sup_{s<=t} |X_s - x| >= R) or (< R) as a sample proportion."""
    if R <= 0.0:
        raise ValueError("R must be positive")
    if direction not in ("ge", "lt"):
        raise ValueError("direction must be 'ge' or 'lt'")
    idx = ensemble.time_index(t)
    rs = ensemble.running_sup[:, idx]
    count = int(np.sum(rs >= R)) if direction == "ge" else int(np.sum(rs < R))
    return ProbabilityEstimate.from_count(count, ensemble.n_paths)


def _compensated_mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


# --------------------------------------------------------------------------
# maximal inequalities (two-sided exit probability bounds)
# --------------------------------------------------------------------------

def maximal_inequality_check(ensemble: PathEnsemble, measure: MeasureSpec, x: float,
                             t_list, R_list, *,
                             config: QuadratureConfig = DEFAULT_CONFIG) -> dict:
    """Fit the constants in the two-sided exit-probability bounds.

    For each (t, R): c1 candidate = P(sup >= R) / (t sup-ball p^U) and
    c2 candidate = P(sup < R) * (t inf-ball p^U).  PASS when both fitted
    constants are finite and grow at most 2x under grid refinement.
    """
    def fitted(ts, Rs):
        c1 = c2 = 0.0
        rows = []
        for t in ts:
            t_snap = ensemble.nearest_time(t)
            for R in Rs:
                p_ge = estimate_sup_probability(ensemble, t_snap, R, "ge")
                p_lt = estimate_sup_probability(ensemble, t_snap, R, "lt")
                sup_ball = ball_extremum(measure, x, R, 1.0 / R, "sup", config=config)
                inf_ball = ball_extremum(measure, x, R, 1.0 / R, "inf", config=config)
                r1 = p_ge.p_hat / (t_snap * sup_ball)
                r2 = p_lt.p_hat * (t_snap * inf_ball)
                rows.append({"t": t_snap, "R": R, "c1_candidate": r1, "c2_candidate": r2,
                             "p_ge": p_ge.to_dict(), "p_lt": p_lt.to_dict()})
                c1 = max(c1, r1)
                c2 = max(c2, r2)
        return c1, c2, rows

    c1_base, c2_base, rows = fitted(t_list, R_list)
    c1_ref, c2_ref, _ = fitted(_densify_list(t_list), _densify_list(R_list))
    ok = (math.isfinite(c1_ref) and math.isfinite(c2_ref)
          and c1_ref <= 2.0 * max(c1_base, 1e-300) and c2_ref <= 2.0 * max(c2_base, 1e-300))
    return {"check": "maximal_inequality", "pass": bool(ok),
            "c1_hat": c1_base, "c2_hat": c2_base,
            "c1_refined": c1_ref, "c2_refined": c2_ref, "rows": rows}


def _densify_list(values):
    v = np.asarray(sorted(values), dtype=float)
    mids = np.sqrt(v[:-1] * v[1:]) if np.all(v > 0) else 0.5 * (v[:-1] + v[1:])
    return np.sort(np.concatenate([v, mids]))


# --------------------------------------------------------------------------
# geometric decay of confinement probabilities
# --------------------------------------------------------------------------

def multi_interval_decay(ensemble: PathEnsemble, measure: MeasureSpec, x: float,
                         R: float, m_max: int, *, min_r2: float = 0.98,
                         config: QuadratureConfig = DEFAULT_CONFIG) -> dict:
    """q_m = P(sup_{s <= m u(x,R)} |X_s - x| <= R) for m = 1..m_max with a
    log-linear fit; PASS when the fit is linear (R^2 >= min_r2) with negative
    slope, the two-sided geometric envelope."""
    u = u_of_R(measure, x, R, config=config)
    if m_max * u > ensemble.times[-1] * (1.0 + 1e-9):
        raise ValueError("grid does not cover m_max * u(x, R)")
    ms = np.arange(1, m_max + 1)
    q = []
    snapped = []
    for m in ms:
        t_snap = ensemble.nearest_time(m * u)
        idx = ensemble.time_index(t_snap)
        q.append(float(np.mean(ensemble.running_sup[:, idx] <= R)))
        snapped.append(t_snap)
    q = np.array(q)
    truncated = False
    pos = q > 0.0
    if not np.all(pos):
        last = int(np.argmin(pos))   # first zero
        ms_fit, q_fit = ms[:last], q[:last]
        truncated = True
    else:
        ms_fit, q_fit = ms, q
    if q_fit.size < 2:
        return {"check": "multi_interval_decay", "pass": False, "u": u,
                "q": q.tolist(), "note": "too few positive q_m to fit"}
    slope, intercept = np.polyfit(ms_fit, np.log(q_fit), 1)
    fitted = slope * ms_fit + intercept
    ss_res = float(np.sum((np.log(q_fit) - fitted) ** 2))
    ss_tot = float(np.sum((np.log(q_fit) - np.mean(np.log(q_fit))) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    ok = r2 >= min_r2 and slope < 0.0 and bool(np.all(np.diff(q) <= 1e-12))
    return {"check": "multi_interval_decay", "pass": bool(ok), "u": u,
            "m": ms.tolist(), "q": q.tolist(), "times": snapped,
            "slope": float(slope), "r_squared": r2, "truncated": truncated,
            "sample_size": ensemble.n_paths}


# --------------------------------------------------------------------------
# one-sided marginal estimate (Spitzer-type)
# --------------------------------------------------------------------------

def spitzer_estimate(ensemble: PathEnsemble, x: float, t_list) -> list:
    """P^x(X_t < x) per probe time, with binomial standard errors."""
    out = []
    for t in t_list:
        idx = ensemble.time_index(ensemble.nearest_time(t))
        count = int(np.sum(ensemble.positions[:, idx] < x))
        est = ProbabilityEstimate.from_count(count, ensemble.n_paths)
        out.append({"t": float(ensemble.times[idx]), **est.to_dict()})
    return out


# --------------------------------------------------------------------------
# Etemadi chain
# --------------------------------------------------------------------------

def etemadi_check(ensemble: PathEnsemble, v: Callable[[float], float], C: float,
                  t_list) -> dict:
    """Check, with 3-SE slack at every probed t,

        3 P(|X_t - x| >= (C/3) v(t)) >= P(sup_{s<=t}|X_s - x| >= C v(t))
                                      >= 1 - exp(-t nu{|y| >= 2 C v(t)}).
    """
    if not ensemble.process.is_state_independent:
        raise LevyOnlyError("Etemadi check requires a Levy (state-independent) ensemble")
    measure = ensemble.process.levy_measure
    rows = []
    ok = True
    n = ensemble.n_paths
    for t in t_list:
        idx = ensemble.time_index(ensemble.nearest_time(t))
        ts = float(ensemble.times[idx])
        vt = float(v(ts))
        marg = ProbabilityEstimate.from_count(
            int(np.sum(np.abs(ensemble.positions[:, idx] - ensemble.x0) >= (C / 3.0) * vt)), n)
        sup = ProbabilityEstimate.from_count(
            int(np.sum(ensemble.running_sup[:, idx] >= C * vt)), n)
        lower = 1.0 - math.exp(-ts * tail_mass(measure, ensemble.x0, 2.0 * C * vt))
        first = 3.0 * marg.p_hat + 3.0 * marg.standard_error >= sup.p_hat - 3.0 * sup.standard_error
        # 3/n rule-of-three allowance keeps the check meaningful at p_hat = 0
        second = sup.p_hat + 3.0 * sup.standard_error + 3.0 / n >= lower
        ok = ok and first and second
        rows.append({"t": ts, "v": vt, "marginal": marg.to_dict(), "sup": sup.to_dict(),
                     "tail_lower_bound": lower,
                     "etemadi_holds": bool(first), "tail_bound_holds": bool(second)})
    return {"check": "etemadi", "pass": bool(ok), "C": C, "rows": rows}


# --------------------------------------------------------------------------
# empirical characteristic function bound
# --------------------------------------------------------------------------

def empirical_charfn(ensemble: PathEnsemble, xi: float, t: float) -> complex:
    """lambda_hat_t(xi) = ensemble mean of e^{i xi (X_t - x)} (compensated sums)."""
    idx = ensemble.time_index(ensemble.nearest_time(t))
    dx = ensemble.positions[:, idx] - ensemble.x0
    if xi == 0.0:
        return complex(1.0, 0.0)
    return complex(_compensated_mean(np.cos(xi * dx)), _compensated_mean(np.sin(xi * dx)))


def empirical_charfn_bound(ensemble: PathEnsemble, symbol: SymbolFamily,
                           xi_list, t_list, *, epsilon: Optional[float] = None,
                           max_violation_fraction: float = 0.01) -> dict:
    """Check |lambda_hat_t(x, xi)| <= exp(-delta t g(xi)) + 4/sqrt(N).

    delta = 1 - c0 - epsilon with c0 the sector estimate; epsilon defaults to
    (1 - c0)/2.  When all violations sit at the largest probed t the report is
    flagged (unknown validity horizon t0(xi, eps)) instead of failed.
    """
    c0 = symbol.sector_value
    if c0 is None or c0 >= 1.0:
        raise ValueError("sector too large: need a finite sector estimate c0 < 1")
    if epsilon is None:
        epsilon = (1.0 - c0) / 2.0
    delta = 1.0 - c0 - epsilon
    if delta <= 0.0:
        raise ValueError("need delta = 1 - c0 - epsilon > 0")
    band = 4.0 / math.sqrt(ensemble.n_paths)
    rows = []
    violations = []
    t_max_probe = max(t_list)
    for t in t_list:
        for xi in xi_list:
            lam = empirical_charfn(ensemble, xi, t)
            bound = math.exp(-delta * t * float(symbol.g(xi))) if xi != 0.0 else 1.0
            violated = abs(lam) > bound + band
            rows.append({"t": float(t), "xi": float(xi),
                         "modulus": abs(lam), "re": lam.real, "im": lam.imag,
                         "bound": bound, "violated": bool(violated)})
            if violated:
                violations.append((t, xi))
    frac = len(violations) / len(rows)
    clustered = bool(violations) and all(t >= t_max_probe * (1.0 - 1e-12) for t, _ in violations)
    ok = frac <= max_violation_fraction
    flagged = (not ok) and clustered
    return {"check": "empirical_charfn_bound", "pass": bool(ok or flagged),
            "flagged_t0_horizon": bool(flagged), "violation_fraction": frac,
            "delta": delta, "band": band, "rows": rows}


# --------------------------------------------------------------------------
# Chung statistic
# --------------------------------------------------------------------------

@dataclass
class ChungStatistic:
    """Per-path L_hat = min over dyadic probes of running_sup(t)/rate(t), with
    the dual exit-time statistic sup_a tau(a) / (u(x,a) log|log u(x,a)|)."""

    window: tuple
    probe_times: tuple
    rates: tuple
    values: np.ndarray
    median: float
    q25: float
    q75: float
    dual_median: Optional[float] = None
    dual_q25: Optional[float] = None
    dual_q75: Optional[float] = None
    dual_paths: int = 0
    extras: dict = field(default_factory=dict)

    def summary(self):
        d = {"window": list(self.window), "probe_times": list(self.probe_times),
             "rates": list(self.rates), "median": self.median,
             "q25": self.q25, "q75": self.q75, "n_paths": int(self.values.size)}
        if self.dual_median is not None:
            d.update({"dual_median": self.dual_median, "dual_q25": self.dual_q25,
                      "dual_q75": self.dual_q75, "dual_paths": self.dual_paths})
        d.update(self.extras)
        return d


def chung_statistic(ensemble: PathEnsemble, measure: MeasureSpec, x: float,
                    t_lo: float, t_hi: float, *,
                    rate_exponent: Optional[float] = None,
                    config: QuadratureConfig = DEFAULT_CONFIG) -> ChungStatistic:
    """Ensemble Chung statistic over the dyadic probe window [t_lo, t_hi].

    The rate is u^{-1}(x, t / log|log t|); ``rate_exponent`` replaces it by
    (t / log|log t|)^rate_exponent (misspecification diagnostics).  The dual
    exit-time statistic is computed only for the correctly specified rate.
    """
    if not (0.0 < t_lo <= t_hi):
        raise ValueError("need 0 < t_lo <= t_hi")
    if t_hi > ensemble.times[-1] * (1 + 1e-9) or t_hi < ensemble.times[0] * (1 - 1e-9):
        raise ValueError("window outside the stored grid")
    probes = []
    t = t_hi
    while t >= t_lo * (1.0 - 1e-12):
        probes.append(ensemble.nearest_time(t))
        t *= 0.5
    probes = sorted(set(probes))
    if not probes:
        raise ValueError("window outside the stored grid")
    rates = []
    for tp in probes:
        ll = math.log(abs(math.log(tp)))
        rho = tp / ll
        if rate_exponent is None:
            rates.append(u_inverse(measure, x, rho, config=config))
        else:
            rates.append(rho ** rate_exponent)
    idx = np.array([ensemble.time_index(tp) for tp in probes])
    ratios = ensemble.running_sup[:, idx] / np.asarray(rates)
    values = np.min(ratios, axis=1)
    med, q25, q75 = (float(np.percentile(values, q)) for q in (50, 25, 75))

    dual = {}
    if rate_exponent is None:
        dual_vals = _dual_exit_statistic(ensemble, measure, x, rates, config)
        if dual_vals.size:
            dual = {"dual_median": float(np.percentile(dual_vals, 50)),
                    "dual_q25": float(np.percentile(dual_vals, 25)),
                    "dual_q75": float(np.percentile(dual_vals, 75)),
                    "dual_paths": int(dual_vals.size)}
    return ChungStatistic(window=(t_lo, t_hi), probe_times=tuple(probes),
                          rates=tuple(rates), values=values,
                          median=med, q25=q25, q75=q75, **dual)


def resolution_drift(ensemble: PathEnsemble, statistic, stride: int = 2) -> dict:
    """Grid-discretization diagnostic: evaluate a scalar ensemble statistic at
    full resolution and on the stride-subsampled grid, report the relative
    drift.  Running suprema measured on a grid underestimate the true
    supremum; a small drift indicates the grid resolves the statistic."""
    full = float(statistic(ensemble))
    coarse = float(statistic(ensemble.subsample(stride)))
    denom = max(abs(full), 1e-300)
    return {"full": full, "coarse": coarse, "stride": stride,
            "relative_drift": abs(full - coarse) / denom}


def _dual_exit_statistic(ensemble, measure, x, radii, config):
    """sup over the radius grid of tau(a) / (u(x,a) log|log u(x,a)|) per path."""
    usable = []
    for a in radii:
        if not 0.0 < a <= 1.0:
            continue
        u = u_of_R(measure, x, a, config=config)
        if u < math.exp(-1.0):
            usable.append((a, u * math.log(abs(math.log(u)))))
    if not usable:
        return np.array([])
    best = np.full(ensemble.n_paths, -np.inf)
    hit = np.zeros(ensemble.n_paths, dtype=bool)
    for a, denom in usable:
        counts = np.sum(ensemble.running_sup < a, axis=1)   # first index with rs >= a
        reached = counts < ensemble.times.size
        taus = np.where(reached, ensemble.times[np.minimum(counts, ensemble.times.size - 1)], np.nan)
        vals = taus / denom
        best = np.where(reached, np.maximum(best, vals), best)
        hit |= reached
    return best[hit]
