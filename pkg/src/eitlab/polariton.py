"""Analytic layer: mixing angles, polariton transforms, rates and velocities.

Everything here is a pure function of the medium constants and the
instantaneous pump amplitudes.  Angles are computed through atan2 on
(numerator, denominator) pairs so extreme parameter ratios cannot overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    FieldState,
    LevelSystem,
    PropagationGeometry,
    StorageUndefinedError,
    omega_total,
)


class UndefinedAngleError(ValueError):
    """A mixing angle is degenerate for the given amplitudes."""


@dataclass(frozen=True)
class MixingAngles:
    """Mixing angles of the polariton basis at one instant.

    theta      photonic/atomic composition of the dark-state polariton
    phi        chained channel angles (m-3 of them)
    phi_pair   pairwise matching angles phi_{j,j+1}
    beta       pairwise absorption mixing angles
    cos_alpha  signed direction averages, one per channel index
    """

    m: int
    theta: float
    phi: tuple[float, ...]
    phi_pair: tuple[float, ...]
    beta: tuple[float, ...]
    cos_alpha: tuple[float, ...]


def _prod_except(values: np.ndarray, j: int) -> float:
    out = 1.0
    for i, v in enumerate(values):
        if i != j:
            out *= v
    return float(out)


def mixing_theta(sys: LevelSystem, omega) -> float:
    """Dark-state mixing angle theta in [0, pi/2).

    tan(theta) = (prod_s g_s) sqrt(N) / sqrt(sum_j Omega_j^2 prod_{l!=j} g_l^2).
    Undefined while every pump is off.
    """
    om = np.asarray(omega, dtype=float)
    if omega_total(om) == 0.0:
        raise StorageUndefinedError("mixing angle undefined during storage (all pumps off)")
    g2 = sys.g_array**2
    num = float(np.prod(sys.g_array)) * math.sqrt(sys.N)
    den = math.sqrt(sum(om[j] ** 2 * _prod_except(g2, j) for j in range(sys.channels)))
    return math.atan2(num, den)


def mixing_phi(sys: LevelSystem, omega) -> np.ndarray:
    """Chained mixing angles phi_1..phi_{m-3} in [0, pi/2].

    tan(phi_j) = (prod_{l<=j} g_l) Omega_{j+1} /
                 sqrt(sum_{l<=j} Omega_l^2 prod_{s<=j+1, s!=l} g_s^2)
    """
    om = np.asarray(omega, dtype=float)
    g = sys.g_array
    out = np.empty(max(sys.channels - 1, 0), dtype=float)
    for j in range(1, sys.channels):  # paper index j, 1-based
        num = float(np.prod(g[:j])) * om[j]
        g2 = g[: j + 1] ** 2
        den2 = sum(om[l] ** 2 * _prod_except(g2, l) for l in range(j))
        if den2 == 0.0 and num == 0.0:
            raise UndefinedAngleError(
                f"phi_{j} undefined: pumps 1..{j + 1} are all off"
            )
        if den2 == 0.0:
            raise UndefinedAngleError(f"phi_{j} undefined: pumps 1..{j} are all off")
        out[j - 1] = math.atan2(num, math.sqrt(den2))
    return out


def pair_mixing_angle(j: int, sys: LevelSystem, omega) -> float:
    """Pairwise matching angle phi_{j,j+1} = atan2(g_j Om_{j+1}, g_{j+1} Om_j)."""
    om = np.asarray(omega, dtype=float)
    g = sys.g_array
    a = g[j - 1] * om[j]
    b = g[j] * om[j - 1]
    if a == 0.0 and b == 0.0:
        raise UndefinedAngleError(f"phi_{j},{j + 1} undefined: both pump products vanish")
    return math.atan2(a, b)


def pair_beta(j: int, sys: LevelSystem, omega) -> float:
    """Absorption mixing angle beta_j for the channel pair (j, j+1).

    tan^2(beta) = N Om_j^2 Om_{j+1}^2 (g_j^2 - g_{j+1}^2)^2
                  / ((g_j^2 Om_{j+1}^2 + g_{j+1}^2 Om_j^2) Om0^4)
    Equal couplings give beta = 0: the pair absorbs at the bare rate.
    """
    om = np.asarray(omega, dtype=float)
    om0 = omega_total(om)
    if om0 == 0.0:
        raise StorageUndefinedError("beta undefined during storage")
    g = sys.g_array
    gj2, gk2 = g[j - 1] ** 2, g[j] ** 2
    mix = gj2 * om[j] ** 2 + gk2 * om[j - 1] ** 2
    if mix == 0.0:
        raise UndefinedAngleError(f"beta_{j} undefined: pump pair ({j},{j + 1}) off")
    tan2 = sys.N * om[j - 1] ** 2 * om[j] ** 2 * (gj2 - gk2) ** 2 / (mix * om0**4)
    return math.atan(math.sqrt(tan2))


def mismatch_decay_rate(j: int, sys: LevelSystem, omega) -> float:
    """Absorption rate of the anti-matched (normal) field of pair (j, j+1).

    rate = (g_j^2 Om_{j+1}^2 + g_{j+1}^2 Om_j^2) N cos^2(beta) / (Gamma Om0^2).
    This large rate is what locks the probe amplitude ratios together.
    """
    om = np.asarray(omega, dtype=float)
    om0 = omega_total(om)
    if om0 == 0.0:
        raise StorageUndefinedError("decay rate undefined during storage")
    g = sys.g_array
    mix = g[j - 1] ** 2 * om[j] ** 2 + g[j] ** 2 * om[j - 1] ** 2
    cos2b = math.cos(pair_beta(j, sys, omega)) ** 2
    return mix * sys.N * cos2b / (sys.Gamma * om0**2)


def direction_cosine(sys: LevelSystem, geom: PropagationGeometry, omega, sigma: int) -> float:
    """Signed direction average cos(alpha_sigma) over channels 1..sigma.

    cos(alpha_s) = sum_{j<=s} d_j Om_j^2 prod_{l<=s,l!=j} g_l^2
                   / sum_{j<=s} Om_j^2 prod_{l<=s,l!=j} g_l^2
    +1 when every involved channel propagates forward; 0 marks a stationary
    configuration.
    """
    om = np.asarray(omega, dtype=float)
    d = geom.d_array
    g2 = sys.g_array[:sigma] ** 2
    num = sum(d[j] * om[j] ** 2 * _prod_except(g2, j) for j in range(sigma))
    den = sum(om[j] ** 2 * _prod_except(g2, j) for j in range(sigma))
    if den == 0.0:
        raise StorageUndefinedError(f"cos(alpha_{sigma}) undefined: pumps 1..{sigma} off")
    return float(num / den)


def group_velocity(sys: LevelSystem, geom: PropagationGeometry, omega) -> float:
    """Transport velocity of the dark-state polariton.

    V_g = c cos^2(theta) cos(alpha_{m-2}).  During storage (all pumps off)
    the polariton is purely atomic; 0 is returned with a warning.
    """
    om = np.asarray(omega, dtype=float)
    if omega_total(om) == 0.0:
        warnings.warn("group velocity requested during storage; returning 0", stacklevel=2)
        return 0.0
    th = mixing_theta(sys, om)
    ca = direction_cosine(sys, geom, om, sys.channels)
    return geom.c_scaled * math.cos(th) ** 2 * ca


def stationary_pump_amplitude(sys: LevelSystem, omega_forward) -> float:
    """Backward-pump amplitude that freezes the polariton (V_g = 0).

    For the layout with channels 1..m-3 forward and channel m-2 backward:
    Om_{m-2}^2 = g_{m-2}^2 sum_{j<=m-3} Om_j^2 / g_j^2, which reproduces the
    m=4 balance g_1 Om_2 = g_2 Om_1.  All forward pumps off is degenerate and
    returns 0 with a warning.
    """
    om = np.asarray(omega_forward, dtype=float)
    if om.size != sys.channels - 1:
        raise ValueError(f"expected {sys.channels - 1} forward amplitudes, got {om.size}")
    g = sys.g_array
    s = float(np.sum((om / g[:-1]) ** 2))
    if s == 0.0:
        warnings.warn("all forward pumps zero: stationary pump degenerate, returning 0",
                      stacklevel=2)
        return 0.0
    out = g[-1] * math.sqrt(s)
    # closed-loop self check: the assembled pump set must give V_g == 0
    geom = PropagationGeometry(d=tuple([1] * (sys.channels - 1) + [-1]),
                               nu=tuple([1.0] * sys.channels), c_scaled=1.0)
    full = np.concatenate([om, [out]])
    resid = abs(direction_cosine(sys, geom, full, sys.channels))
    if resid > 1e-12:
        raise AssertionError(f"stationary pump failed its zero-velocity postcondition: {resid:g}")
    return out


def stationary_pump_amplitude_literal(sys: LevelSystem, omega_forward) -> float:
    """Literal (dimensionally inconsistent) form of the zero-velocity pump.

    Om_{m-2} = sum_j (g_{m-2}^2/g_j^2) Om_j^2.  Exposed read-only for
    documentation; it does not zero the group velocity except by accident.
    Use ``stationary_pump_amplitude`` for the consistent condition.
    """
    om = np.asarray(omega_forward, dtype=float)
    g = sys.g_array
    return float(np.sum(g[-1] ** 2 / g[:-1] ** 2 * om**2))


def adiabatic_parameter(sys: LevelSystem, T: float) -> float:
    """Adiabaticity measure tau = sqrt(sum_j 1/g_j^2) / (sqrt(N) T).

    Runs with tau << 1 stay on the dark manifold; tau ~ 1 runs leak into the
    absorbing superpositions.
    """
    if not T > 0:
        raise ValueError("characteristic time must be positive")
    return math.sqrt(float(np.sum(1.0 / sys.g_array**2))) / (math.sqrt(sys.N) * T)


def mixing_angles(sys: LevelSystem, geom: PropagationGeometry, omega) -> MixingAngles:
    """Bundle every angle needed by the polariton transforms at one instant."""
    om = np.asarray(omega, dtype=float)
    C = sys.channels
    theta = mixing_theta(sys, om)
    phi = tuple(mixing_phi(sys, om)) if C >= 2 else ()
    phi_pair = tuple(pair_mixing_angle(j, sys, om) for j in range(1, C))
    beta = tuple(pair_beta(j, sys, om) for j in range(1, C))
    cos_alpha = tuple(direction_cosine(sys, geom, om, s) for s in range(1, C + 1))
    return MixingAngles(m=sys.m, theta=theta, phi=phi, phi_pair=phi_pair,
                        beta=beta, cos_alpha=cos_alpha)


# ---------------------------------------------------------------------------
# basis and transforms


def _unit_weights(phi: np.ndarray, C: int) -> np.ndarray:
    """Unit photonic weight vector of the dark polariton (hyperspherical)."""
    u = np.empty(C, dtype=float)
    for l in range(C):
        w = 1.0 if l == 0 else math.sin(phi[l - 1])
        for j in range(l, C - 1):
            w *= math.cos(phi[j])
        u[l] = w
    return u


def _residual_weights(phi: np.ndarray, C: int) -> np.ndarray:
    """Orthonormal photonic combinations orthogonal to the dark weights.

    Row k is cos(phi_k) e_{k+1} - sin(phi_k) v_k with v_k the truncated unit
    vector over channels 1..k; rows are then re-orthonormalised against the
    dark vector and each other to suppress rounding for large m.
    """
    rows = np.zeros((max(C - 1, 0), C), dtype=float)
    for k in range(1, C):  # paper index k = 1..m-3
        v = _unit_weights(phi[: k - 1], k)
        rows[k - 1, k] = math.cos(phi[k - 1])
        rows[k - 1, :k] = -math.sin(phi[k - 1]) * v
    return rows


def basis_matrix(angles: MixingAngles, sys: LevelSystem | None = None) -> np.ndarray:
    """Orthogonal change of basis over (E_1..E_{m-2}, sqrt(N) sigma_bc).

    Row 0 carries the dark polariton, row 1 the bright polariton, the
    remaining m-3 rows the purely photonic residual combinations.  The
    result satisfies M^T M = 1 to 1e-12; a Gram-Schmidt pass with tolerance
    1e-13 removes accumulated rounding.
    """
    C = angles.m - 2
    phi = np.asarray(angles.phi, dtype=float)
    u = _unit_weights(phi, C)
    ct, st = math.cos(angles.theta), math.sin(angles.theta)
    M = np.zeros((C + 1, C + 1), dtype=float)
    M[0, :C] = ct * u
    M[0, C] = -st
    M[1, :C] = st * u
    M[1, C] = ct
    M[2:, :C] = _residual_weights(phi, C)
    # Gram-Schmidt on the residual rows against everything above them
    for i in range(2, C + 1):
        for j in range(i):
            M[i] -= (M[i] @ M[j]) * M[j]
        nrm = float(np.linalg.norm(M[i]))
        if nrm < 1e-13:
            raise UndefinedAngleError("degenerate residual weight vector")
        M[i] /= nrm
    return M


def stationary_weights(angles: MixingAngles) -> np.ndarray:
    """Per-channel amplitudes of a frozen dark polariton of unit strength.

    E_l = cos(theta) * w_l with w the unit photonic weight vector; the
    components interfere at their carriers to build the localized envelope.
    """
    u = _unit_weights(np.asarray(angles.phi, dtype=float), angles.m - 2)
    return math.cos(angles.theta) * u


@dataclass
class PolaritonView:
    """A field state re-expressed in the polariton basis.

    dark/bright are the decay-immune and lossy superpositions; residual
    holds the orthonormal photonic combinations; mismatch/matched are the
    pairwise anti-matched and matched probe combinations.
    """

    dark: np.ndarray  # (Nz,)
    bright: np.ndarray  # (Nz,)
    residual: np.ndarray  # (C-1, Nz)
    mismatch: np.ndarray  # (C-1, Nz)
    matched: np.ndarray  # (C-1, Nz)


def to_polaritons(state: FieldState, angles: MixingAngles, sys: LevelSystem) -> PolaritonView:
    """Apply the orthogonal basis per grid point.

    Also forms the pairwise fields
    mismatch_j = -sin(phi_{j,j+1}) E_j + cos(phi_{j,j+1}) E_{j+1}
    matched_j  =  cos(phi_{j,j+1}) E_j + sin(phi_{j,j+1}) E_{j+1}.
    """
    C = sys.channels
    M = basis_matrix(angles, sys)
    vec = np.vstack([state.E, math.sqrt(sys.N) * state.sigma_bc[None, :]])
    out = M @ vec
    pp = np.asarray(angles.phi_pair, dtype=float)
    sp, cp = np.sin(pp)[:, None], np.cos(pp)[:, None]
    mism = -sp * state.E[:-1] + cp * state.E[1:] if C >= 2 else np.zeros((0, state.E.shape[1]))
    matc = cp * state.E[:-1] + sp * state.E[1:] if C >= 2 else np.zeros((0, state.E.shape[1]))
    return PolaritonView(dark=out[0], bright=out[1], residual=out[2:],
                         mismatch=mism, matched=matc)


def from_polaritons(view: PolaritonView, angles: MixingAngles, sys: LevelSystem):
    """Invert ``to_polaritons``; returns (E, sigma_bc)."""
    M = basis_matrix(angles, sys)
    stacked = np.vstack([view.dark[None, :], view.bright[None, :], view.residual])
    vec = M.T @ stacked
    E = vec[:-1]
    sigma_bc = vec[-1] / math.sqrt(sys.N)
    return E, sigma_bc


def adiabatic_sigma_bc(E: np.ndarray, sys: LevelSystem, omega, mode: str = "linear",
                       dE_dt: np.ndarray | None = None) -> np.ndarray:
    """First-order adiabatic predictor for the ground-state coherence.

    linear                sigma_bc = -(1/Om0^2) sum_s g_s Om_s E_s
    with-nonlinear        adds -(1/Om0^4) (sum g E)^dag (sum g E)(sum g Om E)
    with-time-derivative  adds +(Gamma/Om0^4) sum_s g_s Om_s dE_s/dt
    full                  both corrections
    ``dE_dt`` is a finite difference of consecutive snapshots.
    """
    om = np.asarray(omega, dtype=float)
    om0 = omega_total(om)
    if om0 == 0.0:
        raise StorageUndefinedError("adiabatic coherence undefined during storage")
    g = sys.g_array
    lead = -np.einsum("c,cz->z", g * om, E) / om0**2
    out = lead.astype(complex)
    if mode in ("with-nonlinear", "full"):
        s_all = np.einsum("c,cz->z", g, E)
        s_om = np.einsum("c,cz->z", g * om, E)
        out = out - np.conj(s_all) * s_all * s_om / om0**4
    if mode in ("with-time-derivative", "full"):
        if dE_dt is None:
            raise ValueError("time-derivative mode needs dE_dt from consecutive snapshots")
        out = out + sys.Gamma / om0**4 * np.einsum("c,cz->z", g * om, dE_dt)
    elif mode not in ("linear", "with-nonlinear"):
        raise ValueError(f"unknown mode {mode!r}")
    return out
