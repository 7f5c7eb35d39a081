"""Time integration of the coupled probe-propagation and atomic equations.

Mean-field c-number form on a 1D grid.  Atomic equations per grid point
(linear mode):

    d(sigma_be_s)/dt = -Gamma sigma_be_s + i g_s E_s + i Omega_s sigma_bc
    d(sigma_bc)/dt   = i sum_s Omega_s sigma_be_s

Nonlinear mode adds -i sum_s g_s E_s conj(sigma_ce_s) to the second line and
integrates d(sigma_ce_s)/dt = -gamma_ce sigma_ce_s + i g_s E_s conj(sigma_bc)
(or the literal summed drive when selected).  The ground-state coherence
carries no decay term.

Two field schemes are shipped:

* quasistatic (default): drops dE/dt against c dE/dz, so each field profile
  is the cumulative quadrature of its source from the injection boundary.
  The slaved field couples every atom to all of its upstream neighbours with
  gain proportional to the optical depth; at the depths slow light needs,
  any explicit alternation of field and atom sub-steps amplifies transients
  by powers of dt * Gamma * OD and blows up.  The driver therefore advances
  the coupled linear system (coherences plus the cumulative quadrature,
  which enters as an exact constraint) with one theta-weighted implicit step
  per dt, solved through a cached sparse factorisation.  Its fixed points
  are the exact discrete quasi-steady states of the two sub-step contracts.

* characteristics: keeps the full advection on a CFL-exact grid
  (dz == c dt): each step shifts every field by exactly one cell, deposits
  the source, then advances the atoms with a classic RK4 step (fields
  first, then atoms).  The explicit splitting is stable here because the
  field is genuine state.  Retained as the independent oracle scheme and
  the only one on which probe fields can be seeded as initial values.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import polariton
from .model import (
    Config,
    FieldState,
    LevelSystem,
    PropagationGeometry,
    SchemeOptions,
    omega_total,
)


class InstabilityError(RuntimeError):
    """The integration produced NaN/Inf or left the low-excitation regime."""

    def __init__(self, message: str, step: int | None = None, grid_index: int | None = None):
        self.step = step
        self.grid_index = grid_index
        super().__init__(message)


@dataclass
class Trajectory:
    """Ordered snapshots of a run plus its metadata."""

    z: np.ndarray
    times: np.ndarray
    states: list[FieldState]
    pump_amps: np.ndarray  # (S, C) pump amplitudes at snapshot times
    storage_flags: np.ndarray  # (S,) True while every pump is gated off
    scheme: str = "quasistatic"
    n_steps: int = 0
    wall_time: float = 0.0
    aborted: bool = False
    abort_reason: str | None = None
    warnings: list[str] = field(default_factory=list)


def _first_bad_index(arr) -> int:
    bad = ~np.isfinite(arr)
    return int(np.argwhere(bad)[0][-1]) if bad.any() else -1


# ---------------------------------------------------------------------------
# elementary sub-steps (also used directly by tests and the oracle scheme)


def step_atoms(state: FieldState, pumps, sys: LevelSystem, opts: SchemeOptions, dt: float,
               pumps_mid=None, pumps_end=None) -> FieldState:
    """Advance the coherences by one RK4 step with the fields held fixed.

    ``pumps`` are the amplitudes at the step start; the optional mid/end
    samples let the driver resolve slow ramps inside the step.
    """
    om_0 = np.asarray(pumps, dtype=float)
    om_m = om_0 if pumps_mid is None else np.asarray(pumps_mid, dtype=float)
    om_e = om_0 if pumps_end is None else np.asarray(pumps_end, dtype=float)
    g = sys.g_array[:, None]
    gE = g * state.E
    nonlinear = opts.mode == "nonlinear"
    track_ce = opts.include_sigma_ce and state.sigma_ce is not None
    if nonlinear and not track_ce:
        raise ValueError("nonlinear mode requires sigma_ce to be tracked")

    def rhs(be, bc, ce, om):
        d_be = -sys.Gamma * be + 1j * gE + 1j * om[:, None] * bc[None, :]
        d_bc = 1j * np.einsum("c,cz->z", om, be)
        if nonlinear:
            d_bc = d_bc - 1j * np.einsum("cz,cz->z", gE, np.conj(ce))
        if track_ce:
            if opts.sigma_ce_sum == "summed":
                drive = np.broadcast_to(gE.sum(axis=0, keepdims=True), gE.shape)
            else:
                drive = gE
            d_ce = -sys.gamma_ce_value * ce + 1j * drive * np.conj(bc)[None, :]
        else:
            d_ce = None
        return d_be, d_bc, d_ce

    be, bc = state.sigma_be, state.sigma_bc
    ce = state.sigma_ce if track_ce else None

    k1 = rhs(be, bc, ce, om_0)
    k2 = rhs(be + 0.5 * dt * k1[0], bc + 0.5 * dt * k1[1],
             ce + 0.5 * dt * k1[2] if track_ce else None, om_m)
    k3 = rhs(be + 0.5 * dt * k2[0], bc + 0.5 * dt * k2[1],
             ce + 0.5 * dt * k2[2] if track_ce else None, om_m)
    k4 = rhs(be + dt * k3[0], bc + dt * k3[1],
             ce + dt * k3[2] if track_ce else None, om_e)

    new_be = be + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    new_bc = bc + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    new_ce = None
    if state.sigma_ce is not None:
        if track_ce:
            new_ce = ce + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        else:
            new_ce = state.sigma_ce.copy()

    if not np.all(np.isfinite(new_bc)):
        bad = _first_bad_index(new_bc)
        raise InstabilityError(f"non-finite ground coherence at grid index {bad}",
                               grid_index=bad)
    return FieldState(t=state.t + dt, E=state.E, sigma_bc=new_bc, sigma_be=new_be,
                      sigma_ce=new_ce)


def _cumtrapz(f: np.ndarray, dz: float) -> np.ndarray:
    out = np.empty_like(f)
    out[..., 0] = 0.0
    np.cumsum((f[..., 1:] + f[..., :-1]) * (0.5 * dz), axis=-1, out=out[..., 1:])
    return out


def _source_integrals(sigma_be: np.ndarray, geom: PropagationGeometry, dz: float) -> np.ndarray:
    """Cumulative source integral from each channel's injection boundary."""
    I = _cumtrapz(sigma_be, dz)
    out = np.empty_like(I)
    for s in range(sigma_be.shape[0]):
        out[s] = I[s] if geom.d[s] > 0 else I[s, -1] - I[s]
    return out


def step_fields_quasistatic(state: FieldState, sys: LevelSystem, geom: PropagationGeometry,
                            boundary) -> FieldState:
    """Slave each probe field to its source by cumulative trapezoid quadrature.

    Forward channels integrate from z=0, backward channels from z=L:
        E_s(z) = E_s(boundary) + (i g_s N / c) * integral of sigma_be_s.
    """
    bnd = np.asarray(boundary, dtype=complex)
    dz = sys.L / (state.sigma_be.shape[1] - 1)
    I = _source_integrals(state.sigma_be, geom, dz)
    coef = 1j * sys.g_array * sys.N / geom.c_scaled
    E = bnd[:, None] + coef[:, None] * I
    return FieldState(t=state.t, E=E, sigma_bc=state.sigma_bc, sigma_be=state.sigma_be,
                      sigma_ce=state.sigma_ce)


def step_fields_characteristics(state: FieldState, sys: LevelSystem,
                                geom: PropagationGeometry, dt: float, boundary) -> FieldState:
    """Advect each probe field by exactly one cell, then deposit its source.

    Requires dz == c dt (validated).  The upwind boundary cell is refilled
    from the probe input; the source i g_s N sigma_be_s dt is integrated
    trapezoidally along the characteristic (average of the departure and
    arrival cells), which keeps the grid-scale odd-even mode neutral instead
    of convectively amplified.
    """
    bnd = np.asarray(boundary, dtype=complex)
    src = (0.5j * sys.g_array * sys.N * dt)[:, None] * state.sigma_be
    E = np.empty_like(state.E)
    for s in range(sys.channels):
        if geom.d[s] > 0:
            E[s, 1:] = state.E[s, :-1] + src[s, 1:] + src[s, :-1]
            E[s, 0] = bnd[s]
        else:
            E[s, :-1] = state.E[s, 1:] + src[s, :-1] + src[s, 1:]
            E[s, -1] = bnd[s]
    return FieldState(t=state.t, E=E, sigma_bc=state.sigma_bc, sigma_be=state.sigma_be,
                      sigma_ce=state.sigma_ce)


# ---------------------------------------------------------------------------
# implicit quasi-static stepper


class QuasiStaticStepper:
    """One theta-weighted implicit step of the slaved-field atom system.

    Unknowns per cell: sigma_be (C), sigma_bc, and the running source
    integrals I_s (entering through the exact trapezoid constraint), so the
    system matrix couples nearest cells only and factorises in O(Nz).
    Factorisations are cached per pump amplitude tuple; ``hold_steps``
    freezes the pump sample for that many steps so slow ramps do not force
    a refactorisation every step.
    """

    def __init__(self, cfg: Config, theta: float = 0.51):
        self.cfg = cfg
        self.sys = cfg.system
        self.geom = cfg.geometry
        self.opts = cfg.options
        self.theta = float(cfg.experiment.get("theta", theta)) if cfg.experiment else theta
        self.dt = cfg.grid.dt
        self.Nz = cfg.grid.Nz
        self.C = self.sys.channels
        self.dz = cfg.grid.dz
        self.kappa = self.sys.g_array**2 * self.sys.N / self.geom.c_scaled
        self.hold_steps = cfg.options.pump_hold_steps
        self._lu_cache: dict[tuple, object] = {}
        self._held: tuple[int, np.ndarray] | None = None

    def _matrix(self, om: np.ndarray):
        key = tuple(float(v) for v in om)
        lu = self._lu_cache.get(key)
        if lu is not None:
            return lu
        C, Nz, dt, th = self.C, self.Nz, self.dt, self.theta
        nuk = 2 * C + 1
        n = Nz * nuk
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        def idx(i, k):
            return i * nuk + k

        G = self.sys.Gamma
        for i in range(Nz):
            for s in range(C):
                r = idx(i, s)
                add(r, idx(i, s), 1.0 + dt * th * G)
                add(r, idx(i, C + 1 + s), dt * th * self.kappa[s])
                add(r, idx(i, C), -dt * th * 1j * om[s])
            r = idx(i, C)
            add(r, idx(i, C), 1.0)
            for s in range(C):
                add(r, idx(i, s), -dt * th * 1j * om[s])
            for s in range(C):
                r = idx(i, C + 1 + s)
                if self.geom.d[s] > 0:
                    if i == 0:
                        add(r, idx(i, C + 1 + s), 1.0)
                    else:
                        add(r, idx(i, C + 1 + s), 1.0)
                        add(r, idx(i - 1, C + 1 + s), -1.0)
                        add(r, idx(i, s), -0.5 * self.dz)
                        add(r, idx(i - 1, s), -0.5 * self.dz)
                else:
                    if i == Nz - 1:
                        add(r, idx(i, C + 1 + s), 1.0)
                    else:
                        add(r, idx(i, C + 1 + s), 1.0)
                        add(r, idx(i + 1, C + 1 + s), -1.0)
                        add(r, idx(i, s), -0.5 * self.dz)
                        add(r, idx(i + 1, s), -0.5 * self.dz)
        A = sp.csc_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
        lu = splu(A)
        if len(self._lu_cache) > 512:
            self._lu_cache.clear()
        self._lu_cache[key] = lu
        return lu

    def pumps_for_step(self, n: int, t_mid: float) -> np.ndarray:
        """Pump sample held piecewise-constant over ``hold_steps`` steps."""
        if self._held is not None and n < self._held[0] + self.hold_steps:
            return self._held[1]
        om = self.cfg.pump_amplitudes(t_mid)
        self._held = (n, om)
        return om

    def _explicit_rhs(self, state: FieldState, om: np.ndarray):
        """M x for the linear system (boundary forcing handled separately)."""
        I = _source_integrals(state.sigma_be, self.geom, self.dz)
        d_be = (-self.sys.Gamma * state.sigma_be - self.kappa[:, None] * I
                + 1j * om[:, None] * state.sigma_bc[None, :])
        d_bc = 1j * np.einsum("c,cz->z", om, state.sigma_be)
        return d_be, d_bc

    def step(self, state: FieldState, n: int, t: float) -> FieldState:
        dt, th, C, Nz = self.dt, self.theta, self.C, self.Nz
        om = self.pumps_for_step(n, t + 0.5 * dt)
        g = self.sys.g_array

        d_be, d_bc = self._explicit_rhs(state, om)
        bnd_lo = self.cfg.probe_boundary(t)
        bnd_hi = self.cfg.probe_boundary(t + dt)
        force = 1j * g * ((1.0 - th) * bnd_lo + th * bnd_hi)

        nonlinear_bc = None
        if self.opts.mode == "nonlinear" and state.sigma_ce is not None:
            E = step_fields_quasistatic(state, self.sys, self.geom, bnd_lo).E
            gE = g[:, None] * E
            nonlinear_bc = -1j * np.einsum("cz,cz->z", gE, np.conj(state.sigma_ce))

        nuk = 2 * C + 1
        rhs = np.zeros(Nz * nuk, dtype=complex)
        for s in range(C):
            rhs[s::nuk] = state.sigma_be[s] + dt * (1 - th) * d_be[s] + dt * force[s]
        rhs[C::nuk] = state.sigma_bc + dt * (1 - th) * d_bc
        if nonlinear_bc is not None:
            rhs[C::nuk] += dt * nonlinear_bc

        sol = self._matrix(om).solve(rhs)
        new_be = np.empty_like(state.sigma_be)
        for s in range(C):
            new_be[s] = sol[s::nuk]
        new_bc = sol[C::nuk]
        if not np.all(np.isfinite(new_bc)):
            bad = _first_bad_index(new_bc)
            raise InstabilityError(f"non-finite ground coherence at grid index {bad}",
                                   grid_index=bad)

        new_ce = None
        if state.sigma_ce is not None:
            if self.opts.include_sigma_ce:
                E = step_fields_quasistatic(state, self.sys, self.geom, bnd_lo).E
                gE = g[:, None] * E
                if self.opts.sigma_ce_sum == "summed":
                    drive = np.broadcast_to(gE.sum(axis=0, keepdims=True), gE.shape)
                else:
                    drive = gE
                gamma = self.sys.gamma_ce_value
                new_ce = ((state.sigma_ce + dt * 1j * drive * np.conj(state.sigma_bc)[None, :])
                          / (1.0 + dt * gamma))
            else:
                new_ce = state.sigma_ce.copy()
        return FieldState(t=t + dt, E=state.E, sigma_bc=new_bc, sigma_be=new_be,
                          sigma_ce=new_ce)


# ---------------------------------------------------------------------------
# initial seeding


def _seed_state(cfg: Config) -> FieldState:
    """Build the t=0 state: all-zero unless an initial seed is configured."""
    sys, grid, seed = cfg.system, cfg.grid, cfg.initial
    state = FieldState.zeros(sys.channels, grid.Nz, include_ce=cfg.options.include_sigma_ce)
    if seed.kind == "none":
        return state
    z = cfg.z
    f = seed.envelope(z).astype(complex)
    om0 = cfg.pump_amplitudes(0.0)

    if seed.kind == "sigma_bc":
        state.sigma_bc[:] = f
        return state

    E = np.zeros((sys.channels, grid.Nz), dtype=complex)
    if seed.kind == "probe_pulse":
        E[seed.channel - 1] = f
    elif seed.kind == "mismatch_pulse":
        phi = polariton.pair_mixing_angle(seed.pair, sys, om0)
        E[seed.pair - 1] = -np.sin(phi) * f
        E[seed.pair] = np.cos(phi) * f
    elif seed.kind == "matched_pulse":
        ang = polariton.mixing_angles(sys, cfg.geometry, om0)
        w = polariton.stationary_weights(ang)
        E[:] = w[:, None] * f[None, :]
        state.sigma_bc[:] = -np.sin(ang.theta) / np.sqrt(sys.N) * f
        state.E = E
        return state
    state.E = E
    # dress the seed with its first-order coherence so the fast transient is small
    state.sigma_bc[:] = polariton.adiabatic_sigma_bc(E, sys, om0, mode="linear")
    return state


# ---------------------------------------------------------------------------
# driver


def run(cfg: Config) -> Trajectory:
    """Integrate a validated configuration and collect snapshots.

    Pump schedules may gate fully off: those intervals are flagged as
    storage.  NaN/Inf or an excitation fraction above 1 aborts the run,
    keeping the last good snapshot.
    """
    sys, geom, grid, opts = cfg.system, cfg.geometry, cfg.grid, cfg.options
    n_steps = int(round(grid.T_max / grid.dt))
    state = _seed_state(cfg)
    quasi = grid.scheme == "quasistatic"
    stepper = QuasiStaticStepper(cfg) if quasi else None

    z = cfg.z
    times, states, amps, flags = [], [], [], []
    run_warnings: list[str] = []
    warned_excitation = False
    aborted = False
    abort_reason = None
    wall0 = time.perf_counter()

    for n in range(n_steps + 1):
        t = n * grid.dt
        om = cfg.pump_amplitudes(t)
        if quasi:
            state = step_fields_quasistatic(state, sys, geom, cfg.probe_boundary(t))

        if (n % grid.sample_stride == 0) or n == n_steps:
            if not state.is_finite():
                aborted, abort_reason = True, f"non-finite state at step {n} (t={t:g})"
                break
            exc = state.max_excitation()
            if exc > 1.0:
                aborted = True
                abort_reason = (f"excitation fraction {exc:.3g} > 1 at step {n} (t={t:g}): "
                                "outside the low-excitation regime")
                break
            if exc > 0.1 and not warned_excitation:
                warned_excitation = True
                msg = (f"excitation fraction reached {exc:.3g} > 0.1 at t={t:g}; "
                       "low-excitation approximation is strained")
                run_warnings.append(msg)
                warnings.warn(msg, stacklevel=2)
            times.append(t)
            states.append(state.copy())
            amps.append(np.asarray(om, dtype=float).copy())
            flags.append(omega_total(om) < opts.storage_tol)
        if n == n_steps:
            break

        try:
            if quasi:
                state = stepper.step(state, n, t)
            else:
                state = step_fields_characteristics(state, sys, geom, grid.dt,
                                                    cfg.probe_boundary(t + grid.dt))
                state = step_atoms(
                    state, om, sys, opts, grid.dt,
                    pumps_mid=cfg.pump_amplitudes(t + 0.5 * grid.dt),
                    pumps_end=cfg.pump_amplitudes(t + grid.dt),
                )
                state.t = t + grid.dt
        except InstabilityError as e:
            aborted, abort_reason = True, f"step {n} (t={t:g}): {e}"
            break

    if aborted:
        warnings.warn(f"integration aborted: {abort_reason}", stacklevel=2)

    return Trajectory(
        z=z,
        times=np.asarray(times, dtype=float),
        states=states,
        pump_amps=np.asarray(amps, dtype=float) if amps else np.zeros((0, sys.channels)),
        storage_flags=np.asarray(flags, dtype=bool),
        scheme=grid.scheme,
        n_steps=n_steps,
        wall_time=time.perf_counter() - wall0,
        aborted=aborted,
        abort_reason=abort_reason,
        warnings=run_warnings,
    )
