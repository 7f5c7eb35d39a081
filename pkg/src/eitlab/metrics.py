"""Pulse diagnostics and small fitting utilities shared by the experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PulseMetrics:
    """Standard diagnostics of one intensity profile."""

    centroid: float
    fwhm: float
    peak: float
    norm: float


def pulse_centroid(z: np.ndarray, intensity: np.ndarray) -> float:
    w = np.trapz(intensity, z)
    if w <= 0:
        raise ValueError("centroid undefined for a non-positive profile")
    return float(np.trapz(z * intensity, z) / w)


def pulse_fwhm(z: np.ndarray, intensity: np.ndarray) -> float:
    """Full width at half maximum via interpolated crossings around the peak."""
    i0 = int(np.argmax(intensity))
    half = intensity[i0] / 2.0
    if intensity[i0] <= 0:
        raise ValueError("FWHM undefined for a non-positive profile")
    il = i0
    while il > 0 and intensity[il] > half:
        il -= 1
    ir = i0
    n = len(z)
    while ir < n - 1 and intensity[ir] > half:
        ir += 1
    if intensity[il] > half or intensity[ir] > half:
        raise ValueError("half-maximum crossing outside the grid")
    zl = np.interp(half, [intensity[il], intensity[il + 1]], [z[il], z[il + 1]])
    zr = np.interp(half, [intensity[ir], intensity[ir - 1]], [z[ir], z[ir - 1]])
    return float(zr - zl)


def pulse_norm(z: np.ndarray, intensity: np.ndarray) -> float:
    return float(np.trapz(intensity, z))


def pulse_metrics(z: np.ndarray, intensity: np.ndarray) -> PulseMetrics:
    return PulseMetrics(
        centroid=pulse_centroid(z, intensity),
        fwhm=pulse_fwhm(z, intensity),
        peak=float(np.max(intensity)),
        norm=pulse_norm(z, intensity),
    )


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, rms residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def log_linear_fit(x, y) -> tuple[float, float, float]:
    """Fit y ~ A exp(rate x); returns (rate, log A, rms log residual)."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("log-linear fit needs strictly positive data")
    return linear_fit(x, np.log(y))


def overlap_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a,b>|^2 / (|a|^2 |b|^2) over flattened complex fields."""
    a = np.ravel(a)
    b = np.ravel(b)
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na <= 0 or nb <= 0:
        return 0.0
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))


def best_shift_fidelity(field_out: np.ndarray, reference_states: list[np.ndarray],
                        reference_times: np.ndarray) -> tuple[float, float]:
    """Maximise the overlap fidelity over the reference snapshot times.

    Scans the reference trajectory, then refines with a parabola through the
    best sample and its neighbours.  Returns (fidelity, best reference time).
    """
    fids = np.array([overlap_fidelity(field_out, ref) for ref in reference_states])
    i = int(np.argmax(fids))
    t = np.asarray(reference_times, dtype=float)
    if 0 < i < len(fids) - 1:
        y0, y1, y2 = fids[i - 1], fids[i], fids[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            delta = 0.5 * (y0 - y2) / denom
            delta = float(np.clip(delta, -1.0, 1.0))
            t_best = t[i] + delta * (t[min(i + 1, len(t) - 1)] - t[i])
            f_best = y1 - 0.25 * (y0 - y2) * delta
            return float(f_best), float(t_best)
    return float(fids[i]), float(t[i])
