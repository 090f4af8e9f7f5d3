"""Rate laws read off simulation traces.

Frustration decays at an average logarithmic rate k per slice,
p_F(t + dt) = (1 - k dt) p_F(t); once a small solution population appears
at the nucleation time t_h, it grows roughly as p0(t_h) exp(k dT) while it
stays below ~0.3.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

VALIDITY_P0 = 0.3


class NoNucleation(RuntimeError):
    """p0 never rose persistently above the baseline within the horizon."""


@dataclass(frozen=True)
class RateFit:
    k: float
    window: tuple[float, float]
    r_squared: float
    intercept: float = 0.0
    n_points: int = 0
    method: str = "log-linear least squares"


@dataclass(frozen=True)
class Nucleation:
    t_h: float
    index: int
    baseline: float


@dataclass(frozen=True)
class GrowthPrediction:
    p0: float
    outside_validity: bool


@dataclass(frozen=True)
class RateConsistency:
    consistent: bool
    k_mean: float
    product: float
    expected: float
    relative_residual: float


def _loglinear(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit log y = a + b t; returns (b, a, r^2)."""
    ly = np.log(y)
    A = np.vstack([np.ones_like(t), t]).T
    (a, b), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (a + b * t)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return float(b), float(a), r2


def _window_mask(times, window, p0, p0_gate):
    mask = np.ones(times.shape, dtype=bool)
    if window is not None:
        lo, hi = window
        mask &= (times >= lo) & (times <= hi)
    elif p0 is not None:
        mask &= np.asarray(p0, dtype=float) < p0_gate
    return mask


def fit_decay_rate(
    times: Sequence[float],
    pF: Sequence[float],
    window: tuple[float, float] | None = None,
    p0: Sequence[float] | None = None,
    p0_gate: float = VALIDITY_P0,
) -> RateFit:
    """Slope of -log p_F against t.

    Without an explicit window the fit uses the snapshots where p0 < p0_gate
    (all snapshots if no p0 trace is given).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(pF, dtype=float)
    mask = _window_mask(t, window, p0, p0_gate)
    if mask.sum() < 2:
        raise ValueError("fit window holds fewer than two snapshots")
    if np.any(y[mask] <= 0):
        raise ValueError("p_F must be positive on the fit window")
    b, a, r2 = _loglinear(t[mask], y[mask])
    tw = t[mask]
    return RateFit(k=-b, window=(float(tw[0]), float(tw[-1])), r_squared=r2, intercept=a, n_points=int(mask.sum()))


def fit_growth_rate(times, p0, window: tuple[float, float]) -> RateFit:
    """Slope of +log p0 against t on ``window``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(p0, dtype=float)
    mask = _window_mask(t, window, None, VALIDITY_P0)
    if mask.sum() < 2:
        raise ValueError("fit window holds fewer than two snapshots")
    if np.any(y[mask] <= 0):
        raise ValueError("p0 must be positive on the fit window")
    b, a, r2 = _loglinear(t[mask], y[mask])
    tw = t[mask]
    return RateFit(k=b, window=(float(tw[0]), float(tw[-1])), r_squared=r2, intercept=a, n_points=int(mask.sum()))


def default_baseline(p0: Sequence[float], Q: int | None) -> float:
    base = float(p0[0]) if len(p0) else 0.0
    if Q is not None:
        base = max(base, 2.0**-Q)
    return base


def detect_nucleation(
    times: Sequence[float],
    p0: Sequence[float],
    baseline: float | None = None,
    Q: int | None = None,
    persistence: int = 3,
) -> Nucleation:
    """First snapshot from which p0 stays above the baseline for ``persistence``
    consecutive snapshots. Default baseline: max(2^-Q, initial p0)."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(p0, dtype=float)
    if baseline is None:
        baseline = default_baseline(y, Q)
    if not baseline > 0:
        raise ValueError("baseline must be positive")
    need = min(persistence, len(y))
    run = 0
    for i, flag in enumerate(y > baseline):
        run = run + 1 if flag else 0
        if run >= need:
            start = i - run + 1
            return Nucleation(float(t[start]), start, float(baseline))
    raise NoNucleation(f"no nucleation in horizon (baseline {baseline:.3g})")


def predict_growth(p0_at_th: float, k: float, dT: float) -> GrowthPrediction:
    """p0(t_h + dT) ~ p0(t_h) exp(k dT); flagged when past the p0 < 0.3 regime."""
    if p0_at_th < 0 or dT < 0:
        raise ValueError("p0_at_th and dT must be non-negative")
    p = float(p0_at_th * np.exp(k * dT))
    return GrowthPrediction(p, p > VALIDITY_P0 * (1 + 1e-12))


def variable_rate_check(rates: Sequence[float], lengths: Sequence[float], rtol: float = 1e-12) -> RateConsistency:
    """prod_i exp(k_i dt_i) against exp(k dT) with k the length-weighted mean rate."""
    k = np.asarray(rates, dtype=float)
    dt = np.asarray(lengths, dtype=float)
    if k.shape != dt.shape or k.size == 0:
        raise ValueError("need equally many rates and slice lengths")
    if np.any(dt <= 0):
        raise ValueError("slice lengths must be positive")
    total = float(dt.sum())
    k_mean = float((k * dt).sum() / total)
    product = float(np.prod(np.exp(k * dt)))
    expected = float(np.exp(k_mean * total))
    resid = abs(product - expected) / abs(expected)
    return RateConsistency(resid <= rtol, k_mean, product, expected, resid)


def piecewise_rates(times, pF, n_pieces: int) -> tuple[list[RateFit], RateConsistency]:
    """Decay-rate fits on consecutive windows, checked for product consistency."""
    t = np.asarray(times, dtype=float)
    edges = np.linspace(0, len(t) - 1, n_pieces + 1).round().astype(int)
    fits = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        fits.append(fit_decay_rate(t, pF, window=(t[lo], t[hi])))
    check = variable_rate_check([f.k for f in fits], [f.window[1] - f.window[0] for f in fits])
    return fits, check


def slice_model_trace(p0_start: float, k: float, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Discrete slice picture of the projected relaxation.

    Each slice starts inside the triplet space (p0 + pF = 1). Within it the
    frustrated share shrinks by (1 - k dt), the loss going to violated modes,
    and p0 is untouched; the projection then drops the violated share and
    renormalizes.
    """
    p0 = np.empty(n + 1)
    p0[0] = p0_start
    for i in range(n):
        kept_F = (1 - p0[i]) * (1 - k * dt)
        p0[i + 1] = p0[i] / (p0[i] + kept_F)
    return p0, 1 - p0


def time_to_threshold(times, p0, threshold: float = VALIDITY_P0, start: float = 0.0) -> float | None:
    t = np.asarray(times, dtype=float)
    y = np.asarray(p0, dtype=float)
    hit = np.nonzero((y >= threshold) & (t >= start))[0]
    return float(t[hit[0]] - start) if hit.size else None


def bootstrap_ci(
    per_traj: np.ndarray,
    statistic: Callable[[np.ndarray], float | None],
    n_boot: int = 1000,
    rng: np.random.Generator | int = 0,
    level: float = 0.95,
) -> tuple[float, float] | None:
    """Percentile interval of ``statistic`` over trajectory resamples; resamples
    where the statistic is undefined are dropped."""
    rng = np.random.default_rng(rng)
    n = per_traj.shape[0]
    vals = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, n)
        try:
            v = statistic(per_traj[idx])
        except (ValueError, NoNucleation):
            continue
        if v is not None and np.isfinite(v):
            vals.append(v)
    if len(vals) < n_boot // 2:
        return None
    lo, hi = np.quantile(vals, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


# ---------------------------------------------------------------- reports


@dataclass
class ScalingRow:
    Q: int
    k: float | None
    k_ci: tuple[float, float] | None
    t_h: float | None
    t_h_ci: tuple[float, float] | None
    dT_threshold: float | None
    r_squared: float | None
    trajectories: int
    p0_final: float
    baseline: float | None = None
    baseline_generic: float | None = None
    baseline_network: float | None = None
    k_comparison: float | None = None
    rate_ratio: float | None = None


@dataclass
class ScalingReport:
    threshold: float
    rows: list[ScalingRow] = field(default_factory=list)

    def __post_init__(self):
        self._check()

    def add(self, row: ScalingRow) -> None:
        self.rows.append(row)
        self._check()

    def _check(self) -> None:
        qs = [r.Q for r in self.rows]
        if len(set(qs)) != len(qs):
            raise ValueError("Q values in a scaling report must be distinct")

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "rows": [asdict(r) for r in self.rows]}


def analyze_trace(
    times,
    p0,
    pF,
    Q: int | None,
    per_traj_p0: np.ndarray | None = None,
    per_traj_pF: np.ndarray | None = None,
    per_traj_weight: np.ndarray | None = None,
    threshold: float = VALIDITY_P0,
    n_boot: int = 1000,
    seed: int = 0,
    network_baseline: float | None = None,
) -> ScalingRow:
    """Rate fit, nucleation and time-to-threshold for one averaged trace, with
    bootstrap intervals when per-trajectory traces are supplied.

    Two reference levels for p0 are reported alongside: the generic 2^-Q and,
    if given, the network's own Tr(Pi0)/3^T (solution count over triplet
    dimension). Neither is forced to agree with the measured onset.
    """
    times = np.asarray(times, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    pF = np.asarray(pF, dtype=float)

    def rate(p0_tr, pF_tr):
        return fit_decay_rate(times, pF_tr, p0=p0_tr)

    def nucleation(p0_tr):
        if p0_tr[0] >= threshold:
            return Nucleation(float(times[0]), 0, default_baseline(p0_tr, Q))
        return detect_nucleation(times, p0_tr, Q=Q)

    try:
        fit = rate(p0, pF)
        k, r2 = fit.k, fit.r_squared
    except ValueError:
        k = r2 = None
    try:
        nuc = nucleation(p0)
        t_h, baseline = nuc.t_h, nuc.baseline
    except NoNucleation:
        t_h, baseline = None, default_baseline(p0, Q)
    dT = time_to_threshold(times, p0, threshold, start=t_h if t_h is not None else 0.0)

    k_ci = t_h_ci = None
    if per_traj_p0 is not None and per_traj_pF is not None and len(per_traj_p0) > 1:
        w = np.ones_like(per_traj_p0) if per_traj_weight is None else per_traj_weight
        stacked = np.stack([per_traj_p0, per_traj_pF, w], axis=1)

        def avg(sample, j):
            ws = sample[:, 2].sum(axis=0)
            ws = np.where(ws > 0, ws, 1.0)
            return (sample[:, j] * sample[:, 2]).sum(axis=0) / ws

        if k is not None:
            k_ci = bootstrap_ci(stacked, lambda s: rate(avg(s, 0), avg(s, 1)).k, n_boot, seed)
        if t_h is not None:
            t_h_ci = bootstrap_ci(stacked, lambda s: nucleation(avg(s, 0)).t_h, n_boot, seed + 1)
    return ScalingRow(
        Q=Q if Q is not None else -1,
        k=k,
        k_ci=k_ci,
        t_h=t_h,
        t_h_ci=t_h_ci,
        dT_threshold=dT,
        r_squared=r2,
        trajectories=0 if per_traj_p0 is None else len(per_traj_p0),
        p0_final=float(p0[-1]),
        baseline=baseline,
        baseline_generic=None if Q is None else 2.0**-Q,
        baseline_network=network_baseline,
    )


def scaling_report(
    networks,
    run: Callable,
    threshold: float = VALIDITY_P0,
    compare: Callable | None = None,
    n_boot: int = 1000,
) -> ScalingReport:
    """One row per network. ``run(network)`` returns an ensemble result
    (times, p0, pF, weight and per-trajectory traces); ``compare``, if given,
    runs the comparison regime so the two decay rates can be set side by side.
    Networks without a solution are rejected before any simulation."""
    from .network import brute_force_solutions

    counts = {}
    for n in networks:
        counts[n] = len(brute_force_solutions(n))
        if not counts[n]:
            raise ValueError(f"network with Q={n.Q} has no solution")
    report = ScalingReport(threshold)
    for n in networks:
        res = run(n)
        row = analyze_trace(
            res.times,
            res.p0,
            res.pF,
            n.Q,
            res.per_trajectory("p0"),
            res.per_trajectory("pF"),
            res.per_trajectory("weight"),
            threshold,
            n_boot,
            network_baseline=counts[n] / 3**n.T,
        )
        if compare is not None:
            cres = compare(n)
            try:
                row.k_comparison = fit_decay_rate(cres.times, cres.pF, p0=cres.p0).k
            except ValueError:
                row.k_comparison = None
            if row.k and row.k_comparison is not None and row.k != 0:
                row.rate_ratio = row.k_comparison / row.k
        report.add(row)
    return report
