"""Pulse metrics (peak, center, FWHM) and emitter-number scaling fits."""

from dataclasses import dataclass

import numpy as np


@dataclass
class PulseMetrics:
    i_max: float
    t_center: float
    width: float
    valid: bool

    def as_dict(self):
        width = self.width if self.valid and np.isfinite(self.width) else None
        return {
            "i_max": self.i_max,
            "t_center_fs": self.t_center,
            "width_fs": width,
            "valid": self.valid,
        }


@dataclass
class ScalingFit:
    """Least-squares fits I_max ~ a + b N^2 and width ~ c + d / N."""

    quadratic: tuple      # (a, b)
    inverse: tuple        # (c, d)
    quadratic_r2: float
    inverse_r2: float
    quadratic_residuals: np.ndarray
    inverse_residuals: np.ndarray
    n_values: np.ndarray

    def as_dict(self):
        return {
            "i_max_fit": {
                "a": self.quadratic[0],
                "b": self.quadratic[1],
                "r2": self.quadratic_r2,
                "residuals": list(self.quadratic_residuals),
            },
            "width_fit": {
                "c": self.inverse[0],
                "d": self.inverse[1],
                "r2": self.inverse_r2,
                "residuals": list(self.inverse_residuals),
            },
            "n_values": [int(n) for n in self.n_values],
        }


def _interp_crossing(t0, y0, t1, y1, level):
    return t0 + (level - y0) * (t1 - t0) / (y1 - y0)


def pulse_metrics(series, window, component="total"):
    """Pulse metrics of one component of a RadiationSeries.

    component selects which split of the radiation to analyze ("total",
    "individual" or "interference").  The superradiant burst itself lives in
    the interference part; the total rides on the individual-emission
    baseline, which can hide the half-maximum crossings for small ensembles.
    """
    signal = getattr(series, component)
    return signal_pulse_metrics(series.times, signal, window)


def signal_pulse_metrics(times, signal, window):
    """Locate the dominant pulse of `signal` inside a time window.

    The discrete maximum is refined by a parabola through its three
    neighbouring samples; the width is the full width at half maximum found
    by linear interpolation of the half-level crossings on both flanks.
    valid=False when either flank never crosses half maximum inside the
    window (no discernible pulse).  Secondary peaks are ignored: metrics
    always describe the global maximum.
    """
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    t_start, t_end = window
    sel = (times >= t_start) & (times <= t_end)
    if sel.sum() < 3:
        raise ValueError("analysis window contains fewer than three samples")
    t = times[sel]
    y = signal[sel]

    i = int(np.argmax(y))
    i_max = float(y[i])
    t_center = float(t[i])
    # parabolic sub-sample refinement away from the window edges
    if 0 < i < t.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            shift = 0.5 * (y0 - y2) / denom
            if abs(shift) <= 1.0:
                dt_l = t[i] - t[i - 1]
                t_center = float(t[i] + shift * dt_l)
                i_max = float(y1 - 0.25 * (y0 - y2) * shift)

    half = 0.5 * i_max
    left = None
    for j in range(i, 0, -1):
        if y[j - 1] < half <= y[j]:
            left = _interp_crossing(t[j - 1], y[j - 1], t[j], y[j], half)
            break
    right = None
    for j in range(i, t.size - 1):
        if y[j + 1] < half <= y[j]:
            right = _interp_crossing(t[j], y[j], t[j + 1], y[j + 1], half)
            break

    if left is None or right is None:
        return PulseMetrics(i_max=i_max, t_center=t_center, width=float("nan"), valid=False)
    return PulseMetrics(
        i_max=i_max, t_center=t_center, width=float(right - left), valid=True
    )


def _ols(design, y):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    resid = y - pred
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return coef, resid, r2


def scaling_fit(points):
    """Fit pulse metrics against emitter number.

    `points` holds (N, PulseMetrics) pairs.  Points with N <= 3 or invalid
    metrics are excluded (small ensembles show no discernible pulse); at
    least three usable points with distinct N are required.
    """
    usable = [(n, m) for n, m in points if n >= 4 and m.valid]
    if len(usable) < 3:
        raise ValueError(
            f"scaling fit needs >= 3 valid points with N >= 4, got {len(usable)}"
        )
    n_vals = np.array([n for n, _ in usable], dtype=float)
    if np.unique(n_vals).size < 2:
        raise ValueError("scaling fit needs at least two distinct N values")
    i_max = np.array([m.i_max for _, m in usable])
    widths = np.array([m.width for _, m in usable])

    design_q = np.stack([np.ones_like(n_vals), n_vals**2], axis=1)
    coef_q, resid_q, r2_q = _ols(design_q, i_max)
    design_i = np.stack([np.ones_like(n_vals), 1.0 / n_vals], axis=1)
    coef_i, resid_i, r2_i = _ols(design_i, widths)

    return ScalingFit(
        quadratic=(float(coef_q[0]), float(coef_q[1])),
        inverse=(float(coef_i[0]), float(coef_i[1])),
        quadratic_r2=float(r2_q),
        inverse_r2=float(r2_i),
        quadratic_residuals=resid_q,
        inverse_residuals=resid_i,
        n_values=n_vals.astype(int),
    )
