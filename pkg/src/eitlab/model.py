"""Domain types, validation and the JSON configuration schema.

Unit policy: every validated configuration is held in scaled units with the
excited-state decay rate Gamma as the inverse time unit and the medium length
L as the length unit (so Gamma == 1 and L == 1 internally).  SI input is
converted on load and the scale factors are kept so the mapping is a
bijection (see ``config_si_to_scaled`` / ``config_scaled_to_si``).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

_PUMP_KINDS = ("constant", "tanh-ramp", "off-on", "on-off-on")
_PROBE_KINDS = ("zero", "gaussian")
_SEED_KINDS = ("none", "sigma_bc", "matched_pulse", "mismatch_pulse", "probe_pulse")
_SCHEMES = ("quasistatic", "characteristics")


class ConfigError(ValueError):
    """A configuration violated one or more invariants.

    ``errors`` lists every violation as ``"field.path: message"``.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class StorageUndefinedError(ValueError):
    """An analytic quantity was requested while every pump is off."""


def omega_total(amplitudes) -> float:
    """Root-sum-square pump amplitude over all channels."""
    a = np.asarray(amplitudes, dtype=float)
    return float(np.sqrt(np.sum(a * a)))


@dataclass(frozen=True)
class LevelSystem:
    """Atom/field constants of the medium.

    m levels means m-2 probe/pump channel pairs; ``g`` holds the probe
    coupling constants, ``Gamma`` the excited-state transversal decay rate
    (the inverse time unit), ``gamma_ce`` the optional |c>-|e> coherence
    decay, ``N`` the atom number and ``L`` the medium length.
    """

    m: int
    g: tuple[float, ...]
    Gamma: float = 1.0
    gamma_ce: float | None = None
    N: float = 1.0
    L: float = 1.0

    @property
    def channels(self) -> int:
        return self.m - 2

    @property
    def gamma_ce_value(self) -> float:
        return self.Gamma if self.gamma_ce is None else self.gamma_ce

    @property
    def g_array(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float)


@dataclass(frozen=True)
class PropagationGeometry:
    """Direction signs, carrier frequencies and the simulation light speed.

    ``d[s]`` is the sign of the probe wavevector of channel s (+1 forward,
    -1 backward); ``nu`` carriers are used only by the interference-profile
    calculators.  ``pump_k`` is recorded for completeness but unused: the
    envelope equations never involve the pump carrier wavevectors.
    """

    d: tuple[int, ...]
    nu: tuple[float, ...]
    c_scaled: float
    pump_k: tuple[float, ...] | None = None

    @property
    def d_array(self) -> np.ndarray:
        return np.asarray(self.d, dtype=float)


@dataclass(frozen=True)
class PumpSchedule:
    """Time profile of one pump channel.

    kinds:
      constant    Omega(t) = amplitude
      tanh-ramp   amplitude -> amplitude2 around switch_times[0]
      off-on      0 -> amplitude around switch_times[0]
      on-off-on   amplitude -> 0 -> amplitude around switch_times[0], [1]
    T_ramp == 0 degenerates the tanh into a step (used for the deliberately
    non-adiabatic controls).
    """

    kind: str = "constant"
    amplitude: float = 0.0
    amplitude2: float = 0.0
    T_ramp: float = 0.0
    switch_times: tuple[float, ...] = ()

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "tanh-ramp":
            s = self._edge(t, self.switch_times[0])
            return self.amplitude + (self.amplitude2 - self.amplitude) * s
        if self.kind == "off-on":
            return self.amplitude * self._edge(t, self.switch_times[0])
        if self.kind == "on-off-on":
            t1, t2 = self.switch_times[0], self.switch_times[1]
            val = 1.0 - self._edge(t, t1) + self._edge(t, t2)
            return self.amplitude * min(val, 1.0)
        raise ValueError(f"unknown pump profile kind {self.kind!r}")

    def _edge(self, t: float, t0: float) -> float:
        """Smooth 0 -> 1 edge centred at t0 (step when T_ramp == 0).

        Saturates exactly at 7 ramp times from the centre (deviation 9e-7)
        so long holds see strictly constant amplitudes.
        """
        if self.T_ramp <= 0.0:
            return 1.0 if t >= t0 else 0.0
        u = (t - t0) / self.T_ramp
        if u <= -7.0:
            return 0.0
        if u >= 7.0:
            return 1.0
        return 0.5 * (1.0 + math.tanh(u))


@dataclass(frozen=True)
class ProbeInput:
    """Boundary envelope of one probe channel as a function of time."""

    kind: str = "zero"
    peak: float = 0.0
    t0: float = 0.0
    tau_p: float = 1.0

    def __call__(self, t: float) -> complex:
        if self.kind == "zero":
            return 0.0 + 0.0j
        u = (t - self.t0) / self.tau_p
        return complex(self.peak * math.exp(-0.5 * u * u))


@dataclass(frozen=True)
class InitialSeed:
    """Optional state seeded inside the medium at t = 0.

    sigma_bc        gaussian ground-state coherence profile
    matched_pulse   pulse-matched probe fields plus consistent coherence
    mismatch_pulse  pure anti-matched (normal-field) probe combination
    probe_pulse     a single probe channel, others dark
    Field-carrying seeds require the characteristics scheme, because the
    quasi-static solve slaves the fields to the coherences.
    """

    kind: str = "none"
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.1
    channel: int = 1
    pair: int = 1

    def envelope(self, z: np.ndarray) -> np.ndarray:
        u = (z - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * u * u)


@dataclass(frozen=True)
class SimGrid:
    """Spatial/temporal discretisation and snapshot cadence."""

    Nz: int
    dt: float
    T_max: float
    scheme: str = "quasistatic"
    sample_stride: int = 1
    dz: float = 0.0  # derived: L/(Nz-1), filled by validate()


@dataclass(frozen=True)
class SchemeOptions:
    """Integrator mode switches.

    ``linear`` drops the cubic probe coupling and the |c>-|e> coherences;
    ``nonlinear`` integrates them.  ``sigma_ce_sum`` selects the per-channel
    drive (default) or the literal summed drive for the |c>-|e> equation;
    the two coincide whenever the coherences are dropped.
    """

    mode: str = "linear"
    include_sigma_ce: bool = False
    storage_tol: float = 1e-9
    sigma_ce_sum: str = "per-channel"
    pump_hold_steps: int = 1  # quasi-static matrix refresh cadence on ramps


@dataclass
class FieldState:
    """Complex envelopes and coherences on the z grid at one instant."""

    t: float
    E: np.ndarray  # (C, Nz) complex
    sigma_bc: np.ndarray  # (Nz,) complex
    sigma_be: np.ndarray  # (C, Nz) complex
    sigma_ce: np.ndarray | None = None  # (C, Nz) complex when tracked

    @classmethod
    def zeros(cls, channels: int, Nz: int, include_ce: bool = False, t: float = 0.0):
        return cls(
            t=t,
            E=np.zeros((channels, Nz), dtype=complex),
            sigma_bc=np.zeros(Nz, dtype=complex),
            sigma_be=np.zeros((channels, Nz), dtype=complex),
            sigma_ce=np.zeros((channels, Nz), dtype=complex) if include_ce else None,
        )

    def copy(self) -> "FieldState":
        return FieldState(
            t=self.t,
            E=self.E.copy(),
            sigma_bc=self.sigma_bc.copy(),
            sigma_be=self.sigma_be.copy(),
            sigma_ce=None if self.sigma_ce is None else self.sigma_ce.copy(),
        )

    def excitation_fraction(self) -> np.ndarray:
        """Per grid point excitation Sum_s |sigma_be_s|^2 + |sigma_bc|^2."""
        return np.sum(np.abs(self.sigma_be) ** 2, axis=0) + np.abs(self.sigma_bc) ** 2

    def max_excitation(self) -> float:
        return float(np.max(self.excitation_fraction()))

    def is_finite(self) -> bool:
        ok = np.all(np.isfinite(self.E)) and np.all(np.isfinite(self.sigma_bc))
        ok = ok and np.all(np.isfinite(self.sigma_be))
        if self.sigma_ce is not None:
            ok = ok and np.all(np.isfinite(self.sigma_ce))
        return bool(ok)


@dataclass(frozen=True)
class Config:
    """A fully validated run configuration (scaled units)."""

    system: LevelSystem
    geometry: PropagationGeometry
    pumps: tuple[PumpSchedule, ...]
    probes: tuple[ProbeInput, ...]
    grid: SimGrid
    options: SchemeOptions = SchemeOptions()
    initial: InitialSeed = InitialSeed()
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    si_scales: dict | None = None

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.system.L, self.grid.Nz)

    @property
    def injection_sides(self) -> tuple[str, ...]:
        """Derived: forward channels inject at z=0, backward at z=L."""
        return tuple("z=0" if d > 0 else "z=L" for d in self.geometry.d)

    def pump_amplitudes(self, t: float) -> np.ndarray:
        return np.array([p(t) for p in self.pumps], dtype=float)

    def probe_boundary(self, t: float) -> np.ndarray:
        return np.array([p(t) for p in self.probes], dtype=complex)

    def to_dict(self) -> dict:
        """Canonical plain-dict form (the JSON schema of the config file)."""
        d = {
            "units": "scaled",
            "system": {
                "m": self.system.m,
                "g": list(self.system.g),
                "Gamma": self.system.Gamma,
                "N": self.system.N,
                "L": self.system.L,
            },
            "geometry": {
                "d": list(self.geometry.d),
                "nu": list(self.geometry.nu),
                "c_scaled": self.geometry.c_scaled,
            },
            "pumps": [
                {
                    "kind": p.kind,
                    "amplitude": p.amplitude,
                    "amplitude2": p.amplitude2,
                    "T_ramp": p.T_ramp,
                    "switch_times": list(p.switch_times),
                }
                for p in self.pumps
            ],
            "probes": [
                {"kind": p.kind, "peak": p.peak, "t0": p.t0, "tau_p": p.tau_p}
                for p in self.probes
            ],
            "grid": {
                "Nz": self.grid.Nz,
                "dt": self.grid.dt,
                "T_max": self.grid.T_max,
                "scheme": self.grid.scheme,
                "sample_stride": self.grid.sample_stride,
            },
            "scheme_options": {
                "mode": self.options.mode,
                "include_sigma_ce": self.options.include_sigma_ce,
                "storage_tol": self.options.storage_tol,
                "sigma_ce_sum": self.options.sigma_ce_sum,
                "pump_hold_steps": self.options.pump_hold_steps,
            },
            "initial_state": {
                "kind": self.initial.kind,
                "amplitude": self.initial.amplitude,
                "center": self.initial.center,
                "width": self.initial.width,
                "channel": self.initial.channel,
                "pair": self.initial.pair,
            },
            "experiment": copy.deepcopy(self.experiment),
            "output": copy.deepcopy(self.output),
        }
        if self.system.gamma_ce is not None:
            d["system"]["gamma_ce"] = self.system.gamma_ce
        if self.si_scales is not None:
            d["si_scales"] = dict(self.si_scales)
        return d


# ---------------------------------------------------------------------------
# validation


def _get(raw: dict, path: str, default=None):
    cur = raw
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def validate(raw) -> Config:
    """Validate a configuration and fill in derived quantities.

    Accepts a plain dict (the JSON schema) or an already-validated Config;
    the operation is idempotent.  Every violated invariant is reported with
    its field path in a single ConfigError.
    """
    if isinstance(raw, Config):
        raw = raw.to_dict()
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a JSON object"])
    raw = copy.deepcopy(raw)
    if raw.get("units", "scaled") == "si":
        raw = config_si_to_scaled(raw)

    errors: list[str] = []

    def err(path, msg):
        errors.append(f"{path}: {msg}")

    m = _get(raw, "system.m")
    if not isinstance(m, int) or m < 3:
        err("system.m", "m must be >= 3")
        m = 3
    C = m - 2

    g = _get(raw, "system.g", [])
    if len(g) != C:
        err("system.g", f"expected {C} coupling constants, got {len(g)}")
        g = [1.0] * C
    if any(not (gv > 0) for gv in g):
        err("system.g", "all coupling constants must be positive")
    Gamma = float(_get(raw, "system.Gamma", 1.0))
    if not Gamma > 0:
        err("system.Gamma", "decay rate must be positive")
    N = float(_get(raw, "system.N", 0.0))
    if not N > 0:
        err("system.N", "atom number must be positive")
    L = float(_get(raw, "system.L", 1.0))
    if not L > 0:
        err("system.L", "medium length must be positive")
    gamma_ce = _get(raw, "system.gamma_ce")
    if gamma_ce is not None and not float(gamma_ce) >= 0:
        err("system.gamma_ce", "coherence decay must be non-negative")

    d = _get(raw, "geometry.d", [])
    if len(d) != C:
        err("geometry.d", f"expected {C} direction signs, got {len(d)}")
        d = [1] * C
    if any(int(dv) not in (1, -1) for dv in d):
        err("geometry.d", "direction signs must be +1 or -1")
    nu = _get(raw, "geometry.nu", [])
    if len(nu) != C:
        err("geometry.nu", f"expected {C} carrier frequencies, got {len(nu)}")
        nu = [1.0] * C
    if any(not (v > 0) for v in nu):
        err("geometry.nu", "carrier frequencies must be strictly positive")
    c_scaled = _get(raw, "geometry.c_scaled")

    pumps_raw = raw.get("pumps", [])
    if len(pumps_raw) != C:
        err("pumps", f"expected {C} pump schedules, got {len(pumps_raw)}")
        pumps_raw = [{"kind": "constant", "amplitude": 1.0}] * C
    pumps = []
    for i, p in enumerate(pumps_raw):
        kind = p.get("kind", "constant")
        if kind not in _PUMP_KINDS:
            err(f"pumps.{i}.kind", f"unknown profile kind {kind!r}; choose from {_PUMP_KINDS}")
            kind = "constant"
        amp = float(p.get("amplitude", 0.0))
        amp2 = float(p.get("amplitude2", 0.0))
        if amp < 0 or amp2 < 0:
            err(f"pumps.{i}.amplitude", "pump amplitudes must be non-negative")
        T_ramp = float(p.get("T_ramp", 0.0))
        if T_ramp < 0:
            err(f"pumps.{i}.T_ramp", "ramp time must be non-negative")
        sw = tuple(float(s) for s in p.get("switch_times", ()))
        need = {"constant": 0, "tanh-ramp": 1, "off-on": 1, "on-off-on": 2}[kind]
        if len(sw) < need:
            err(f"pumps.{i}.switch_times", f"profile {kind!r} needs {need} switch time(s)")
            sw = tuple([0.0] * need)
        if list(sw) != sorted(sw):
            err(f"pumps.{i}.switch_times", "switch times must be increasing")
        pumps.append(PumpSchedule(kind, amp, amp2, T_ramp, sw))
    if all(p.kind == "constant" and p.amplitude == 0.0 for p in pumps):
        err("pumps", "all pumps identically zero: the pump-off state is legal only as a storage phase")

    probes_raw = raw.get("probes", [{"kind": "zero"}] * C)
    if len(probes_raw) != C:
        err("probes", f"expected {C} probe inputs, got {len(probes_raw)}")
        probes_raw = [{"kind": "zero"}] * C
    probes = []
    for i, p in enumerate(probes_raw):
        kind = p.get("kind", "zero")
        if kind not in _PROBE_KINDS:
            err(f"probes.{i}.kind", f"unknown probe kind {kind!r}; choose from {_PROBE_KINDS}")
            kind = "zero"
        peak = float(p.get("peak", 0.0))
        tau_p = float(p.get("tau_p", 1.0))
        if kind == "gaussian" and not tau_p > 0:
            err(f"probes.{i}.tau_p", "gaussian width must be positive")
        if not math.isfinite(peak):
            err(f"probes.{i}.peak", "envelope must be bounded")
        probes.append(ProbeInput(kind, peak, float(p.get("t0", 0.0)), tau_p))

    Nz = _get(raw, "grid.Nz", 0)
    if not isinstance(Nz, int) or Nz < 16:
        err("grid.Nz", "Nz must be an integer >= 16")
        Nz = 16
    dt = float(_get(raw, "grid.dt", 0.0))
    if not dt > 0:
        err("grid.dt", "dt must be positive")
    elif dt * Gamma > 0.5:
        err("grid.dt", f"dt*Gamma = {dt * Gamma:g} > 0.5 is unstable for the explicit atom step")
    T_max = float(_get(raw, "grid.T_max", 0.0))
    if not T_max > 0:
        err("grid.T_max", "T_max must be positive")
    scheme = _get(raw, "grid.scheme", "quasistatic")
    if scheme not in _SCHEMES:
        err("grid.scheme", f"unknown scheme {scheme!r}; choose from {_SCHEMES}")
        scheme = "quasistatic"
    stride = _get(raw, "grid.sample_stride", 1)
    if not isinstance(stride, int) or stride < 1:
        err("grid.sample_stride", "sample_stride must be an integer >= 1")
        stride = 1

    dz = L / (Nz - 1)

    sys_ok = not errors
    system = LevelSystem(m=m, g=tuple(float(v) for v in g), Gamma=Gamma,
                         gamma_ce=None if gamma_ce is None else float(gamma_ce), N=N, L=L)

    if c_scaled is None:
        # default: 100x the largest slow-light factor of the run, in L*Gamma units
        c_scaled = 100.0 * L * Gamma * _max_slowlight_factor(system, tuple(int(v) for v in d), pumps, T_max)
    c_scaled = float(c_scaled)
    if not c_scaled > 0:
        err("geometry.c_scaled", "vacuum speed must be positive")

    if scheme == "characteristics" and dt > 0 and c_scaled > 0:
        if abs(dz - c_scaled * dt) > 1e-9 * dz:
            err(
                "grid",
                "characteristics scheme requires the CFL-exact constraint dz == c_scaled*dt "
                f"(exact one-cell advection); got dz={dz!r}, c_scaled*dt={c_scaled * dt!r}",
            )

    opt_raw = raw.get("scheme_options", {})
    mode = opt_raw.get("mode", "linear")
    if mode not in ("linear", "nonlinear"):
        err("scheme_options.mode", f"unknown mode {mode!r}")
        mode = "linear"
    include_ce = bool(opt_raw.get("include_sigma_ce", mode == "nonlinear"))
    if mode == "nonlinear" and not include_ce:
        err("scheme_options.include_sigma_ce", "nonlinear mode requires include_sigma_ce")
    ce_sum = opt_raw.get("sigma_ce_sum", "per-channel")
    if ce_sum not in ("per-channel", "summed"):
        err("scheme_options.sigma_ce_sum", f"unknown variant {ce_sum!r}")
        ce_sum = "per-channel"
    hold = opt_raw.get("pump_hold_steps", 1)
    if not isinstance(hold, int) or hold < 1:
        err("scheme_options.pump_hold_steps", "must be an integer >= 1")
        hold = 1
    options = SchemeOptions(mode=mode, include_sigma_ce=include_ce,
                            storage_tol=float(opt_raw.get("storage_tol", 1e-9)),
                            sigma_ce_sum=ce_sum, pump_hold_steps=hold)

    seed_raw = raw.get("initial_state", {"kind": "none"})
    seed_kind = seed_raw.get("kind", "none")
    if seed_kind not in _SEED_KINDS:
        err("initial_state.kind", f"unknown seed kind {seed_kind!r}; choose from {_SEED_KINDS}")
        seed_kind = "none"
    seed = InitialSeed(
        kind=seed_kind,
        amplitude=float(seed_raw.get("amplitude", 0.0)),
        center=float(seed_raw.get("center", 0.5)),
        width=float(seed_raw.get("width", 0.1)),
        channel=int(seed_raw.get("channel", 1)),
        pair=int(seed_raw.get("pair", 1)),
    )
    if seed.kind in ("matched_pulse", "mismatch_pulse", "probe_pulse") and scheme != "characteristics":
        err("initial_state.kind",
            f"seed kind {seed.kind!r} sets probe fields directly and requires the "
            "characteristics scheme (the quasi-static solve slaves the fields)")
    if seed.kind != "none" and not seed.width > 0:
        err("initial_state.width", "seed width must be positive")
    if seed.kind == "probe_pulse" and not (1 <= seed.channel <= C):
        err("initial_state.channel", f"channel must be in 1..{C}")
    if seed.kind == "mismatch_pulse" and not (1 <= seed.pair <= max(C - 1, 1)):
        err("initial_state.pair", f"pair index must be in 1..{C - 1}")

    if errors:
        raise ConfigError(errors)

    geometry = PropagationGeometry(
        d=tuple(int(v) for v in d), nu=tuple(float(v) for v in nu), c_scaled=c_scaled,
        pump_k=None if _get(raw, "geometry.pump_k") is None
        else tuple(float(v) for v in _get(raw, "geometry.pump_k")),
    )
    grid = SimGrid(Nz=Nz, dt=dt, T_max=T_max, scheme=scheme, sample_stride=stride, dz=dz)
    return Config(
        system=system, geometry=geometry, pumps=tuple(pumps), probes=tuple(probes),
        grid=grid, options=options, initial=seed,
        experiment=raw.get("experiment", {}), output=raw.get("output", {}),
        si_scales=raw.get("si_scales"),
    )


def _max_slowlight_factor(system, d, pumps, T_max) -> float:
    """Largest |cos^2(theta) cos(alpha)| over a coarse schedule sample."""
    from . import polariton  # local import to avoid a cycle

    geom = PropagationGeometry(d=tuple(d), nu=tuple([1.0] * len(d)), c_scaled=1.0)
    best = 1e-3
    for t in np.linspace(0.0, T_max, 33):
        om = np.array([p(t) for p in pumps])
        if omega_total(om) <= 0:
            continue
        try:
            v = abs(polariton.group_velocity(system, geom, om))
        except StorageUndefinedError:
            continue
        best = max(best, v)
    return best


# ---------------------------------------------------------------------------
# units

_RATE_KEYS = ("Gamma", "gamma_ce")


def config_si_to_scaled(raw: dict) -> dict:
    """Convert an SI config dict to scaled units (time 1/Gamma, length L).

    The scale factors are stored under ``si_scales`` so the conversion is a
    bijection; ``config_scaled_to_si`` inverts it exactly.
    """
    raw = copy.deepcopy(raw)
    G = float(_get(raw, "system.Gamma", 1.0))
    L = float(_get(raw, "system.L", 1.0))
    if not (G > 0 and L > 0):
        raise ConfigError(["system: SI conversion requires positive Gamma and L"])
    s = raw["system"]
    s["g"] = [v / G for v in s.get("g", [])]
    s["Gamma"] = 1.0
    if s.get("gamma_ce") is not None:
        s["gamma_ce"] = s["gamma_ce"] / G
    s["L"] = 1.0
    geo = raw.get("geometry", {})
    if "nu" in geo:
        geo["nu"] = [v / G for v in geo["nu"]]
    if geo.get("c_scaled") is not None:
        geo["c_scaled"] = geo["c_scaled"] / (L * G)
    if geo.get("pump_k") is not None:
        geo["pump_k"] = [v * L for v in geo["pump_k"]]
    for p in raw.get("pumps", []):
        p["amplitude"] = p.get("amplitude", 0.0) / G
        p["amplitude2"] = p.get("amplitude2", 0.0) / G
        p["T_ramp"] = p.get("T_ramp", 0.0) * G
        p["switch_times"] = [t * G for t in p.get("switch_times", [])]
    for p in raw.get("probes", []):
        if "t0" in p:
            p["t0"] = p["t0"] * G
        if "tau_p" in p:
            p["tau_p"] = p["tau_p"] * G
    grid = raw.get("grid", {})
    if "dt" in grid:
        grid["dt"] = grid["dt"] * G
    if "T_max" in grid:
        grid["T_max"] = grid["T_max"] * G
    init = raw.get("initial_state", {})
    for key in ("center", "width"):
        if key in init:
            init[key] = init[key] / L
    raw["units"] = "scaled"
    raw["si_scales"] = {"Gamma": G, "L": L}
    return raw


def config_scaled_to_si(raw: dict, Gamma: float | None = None, L: float | None = None) -> dict:
    """Invert ``config_si_to_scaled`` using the recorded (or given) scales."""
    raw = copy.deepcopy(raw)
    scales = raw.pop("si_scales", {})
    G = float(Gamma if Gamma is not None else scales.get("Gamma", 1.0))
    L = float(L if L is not None else scales.get("L", 1.0))
    s = raw["system"]
    s["g"] = [v * G for v in s.get("g", [])]
    s["Gamma"] = G
    if s.get("gamma_ce") is not None:
        s["gamma_ce"] = s["gamma_ce"] * G
    s["L"] = L
    geo = raw.get("geometry", {})
    if "nu" in geo:
        geo["nu"] = [v * G for v in geo["nu"]]
    if geo.get("c_scaled") is not None:
        geo["c_scaled"] = geo["c_scaled"] * (L * G)
    if geo.get("pump_k") is not None:
        geo["pump_k"] = [v / L for v in geo["pump_k"]]
    for p in raw.get("pumps", []):
        p["amplitude"] = p.get("amplitude", 0.0) * G
        p["amplitude2"] = p.get("amplitude2", 0.0) * G
        p["T_ramp"] = p.get("T_ramp", 0.0) / G
        p["switch_times"] = [t / G for t in p.get("switch_times", [])]
    for p in raw.get("probes", []):
        if "t0" in p:
            p["t0"] = p["t0"] / G
        if "tau_p" in p:
            p["tau_p"] = p["tau_p"] / G
    grid = raw.get("grid", {})
    if "dt" in grid:
        grid["dt"] = grid["dt"] / G
    if "T_max" in grid:
        grid["T_max"] = grid["T_max"] / G
    init = raw.get("initial_state", {})
    for key in ("center", "width"):
        if key in init:
            init[key] = init[key] * L
    raw["units"] = "si"
    return raw


# ---------------------------------------------------------------------------
# presets


def preset_names() -> list[str]:
    files = resources.files("eitlab").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    """Load a shipped preset configuration by bare name."""
    path = resources.files("eitlab").joinpath("presets", f"{name}.json")
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
