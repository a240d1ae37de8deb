"""Experiment orchestration: config parsing, runs, certificate verification,
and gain sweeps.

Config documents are line-oriented UTF-8 `key = value` text with `#`
comments.  Recognized keys: k, beta, alpha, gamma, h_star, psi, psi_scale,
n, T, sample_dt, rtol, atol, z0, z1, zhat0, zhat1, mode, snapshots.  Profile
values: zero, const:<c>, paper, expr:<expression in x>.  Unset keys take the
reference-experiment defaults; gamma has no default and must be given for
closed-loop runs.  The exact text "paper-5.2" resolves to the built-in
reference preset.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .admissibility import check_assumption2, piecewise_beta_bound
from .core import (ClosedLoopState, ControllerConfig, FieldState,
                   ObserverConfig, PhysicalParams, build_grid, sample_profile)
from .dynamics import loop_signals, output_y, rhs_field
from .functionals import hamiltonian, weighted_error
from .integrator import IntegratorConfig, integrate

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "TimeSeriesRecord",
    "CertificateCheck",
    "SweepRow",
    "PRESETS",
    "load_config",
    "run",
    "verify_certificate",
    "gamma_sweep",
]

MODES = ("closed-loop", "unforced", "plant-only")

PRESETS = {
    "paper-5.2": """\
# reference closed-loop experiment (gamma must be supplied)
k = 0.12
beta = 0.02
alpha = 20
h_star = 10
n = 1000
T = 50
sample_dt = 0.01
z0 = paper
z1 = zero
zhat0 = zero
zhat1 = zero
mode = closed-loop
""",
}


class ConfigError(ValueError):
    """Configuration document or override could not be parsed/validated."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One fully validated experiment description."""

    params: PhysicalParams
    n: int
    obs: ObserverConfig
    gamma: float | None
    h_star: float
    psi: str
    psi_scale: float
    z0: object
    z1: object
    T: float
    sample_dt: float
    integrator: IntegratorConfig
    mode: str
    snapshots: tuple = ()

    def controller(self):
        """The controller object; requires gamma to be set."""
        if self.gamma is None:
            raise ValueError("gamma is required in closed-loop mode")
        return ControllerConfig(gamma=self.gamma, h_star=self.h_star,
                                psi=self.psi, psi_scale=self.psi_scale)


@dataclass
class TimeSeriesRecord:
    """Sampled time histories of one run, plus provenance and final state."""

    t: np.ndarray
    H: np.ndarray
    H_hat: np.ndarray
    E: np.ndarray
    u: np.ndarray
    y: np.ndarray
    snapshots: dict = field(default_factory=dict)
    params: PhysicalParams | None = None
    alpha: float | None = None
    gamma: float | None = None
    h_star: float | None = None
    mode: str | None = None
    uncertified: bool = False
    final: ClosedLoopState | None = None
    stats: object = None


@dataclass(frozen=True)
class CertificateCheck:
    """Certificate-vs-trajectory verification outcome with worst margins.

    Margins are worst-case ratios of the measured quantity to its bound; a
    margin <= 1 means the bound held at every sample.  slack is the
    multiplicative allowance on the decay bound; floor is the additive
    allowance that keeps the degenerate E(0) = 0 case meaningful.
    """

    ok_decay: bool
    ok_mismatch: bool
    ok_energy: bool
    margin_decay: float
    margin_mismatch: float
    margin_energy: float
    slack: float
    floor: float

    @property
    def passed(self):
        return self.ok_decay and self.ok_mismatch and self.ok_energy


@dataclass(frozen=True)
class SweepRow:
    """Per-gamma summary of one sweep run.

    band_entry is the first sample time with |H - H*| <= 0.05 H*;
    band_settle is the first sample time after which the trajectory never
    leaves that band again.  Either is nan when the event never happens.
    error carries the failure message when the run did not complete.
    """

    gamma: float
    h_err_final: float
    band_entry: float
    band_settle: float
    e_ratio: float
    error: str | None = None


_DEFAULTS = {
    "k": "0.12", "beta": "0.02", "alpha": "20", "gamma": None,
    "h_star": "10", "psi": "linear", "psi_scale": "1",
    "n": "1000", "T": "50", "sample_dt": "0.01",
    "rtol": "1e-6", "atol": "1e-9",
    "z0": "paper", "z1": "zero", "zhat0": "zero", "zhat1": "zero",
    "mode": "unforced", "snapshots": "",
}


def _parse_float(key, text, where):
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(f"{where}: key '{key}': not a number: {text!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"{where}: key '{key}': must be finite, got {text!r}")
    return val


def _parse_profile(key, text, where):
    text = text.strip()
    if text in ("zero", "paper"):
        return text
    if text.startswith("const:"):
        _parse_float(key, text[len("const:"):], where)
        return text
    if text.startswith("expr:") and text[len("expr:"):].strip():
        return text
    raise ConfigError(
        f"{where}: key '{key}': bad profile {text!r} "
        f"(expected zero, const:<c>, paper, or expr:<expression in x>)")


def load_config(text, overrides=None):
    """Parse a config document (or preset name) into a ScenarioConfig.

    overrides is an optional mapping of key -> value text applied after the
    document, used by the CLI for flags like --gamma.  Errors name the
    offending key and line.
    """
    stripped = text.strip()
    if stripped in PRESETS:
        text = PRESETS[stripped]

    raw = {}
    where_of = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        raw[key] = value
        where_of[key] = f"line {lineno}"
    for key, value in (overrides or {}).items():
        if key not in _DEFAULTS:
            raise ConfigError(f"override: unknown key '{key}'")
        raw[key] = str(value)
        where_of[key] = "override"

    def get(key):
        return raw.get(key, _DEFAULTS[key]), where_of.get(key, "default")

    def pos_float(key, minimum_excl=0.0):
        text_val, where = get(key)
        val = _parse_float(key, text_val, where)
        if not val > minimum_excl:
            raise ConfigError(f"{where}: key '{key}': must be > {minimum_excl}, got {val}")
        return val

    k = pos_float("k")
    beta = pos_float("beta")
    alpha = pos_float("alpha")
    t_final = pos_float("T")
    sample_dt = pos_float("sample_dt")
    rtol = pos_float("rtol")
    atol = pos_float("atol")
    psi_scale = pos_float("psi_scale")

    text_val, where = get("h_star")
    h_star = _parse_float("h_star", text_val, where)
    if h_star < 0:
        raise ConfigError(f"{where}: key 'h_star': must be >= 0, got {h_star}")

    text_val, where = get("gamma")
    gamma = None if text_val is None else _parse_float("gamma", text_val, where)
    if gamma is not None and gamma <= 0:
        raise ConfigError(f"{where}: key 'gamma': must be > 0, got {gamma}")

    text_val, where = get("n")
    try:
        n = int(text_val, 10)
    except ValueError:
        raise ConfigError(f"{where}: key 'n': not an integer: {text_val!r}") from None
    if n < 3:
        raise ConfigError(f"{where}: key 'n': need n >= 3, got {n}")

    text_val, where = get("psi")
    psi = text_val
    if psi not in ("linear", "tanh"):
        raise ConfigError(f"{where}: key 'psi': expected linear or tanh, got {psi!r}")

    text_val, where = get("mode")
    mode = text_val
    if mode not in MODES:
        raise ConfigError(f"{where}: key 'mode': expected one of {MODES}, got {mode!r}")

    profiles = {}
    for key in ("z0", "z1", "zhat0", "zhat1"):
        text_val, where = get(key)
        profiles[key] = _parse_profile(key, text_val, where)

    text_val, where = get("snapshots")
    snapshots = []
    if text_val.strip():
        for part in text_val.split(","):
            ts = _parse_float("snapshots", part.strip(), where)
            if not 0.0 <= ts <= t_final:
                raise ConfigError(
                    f"{where}: key 'snapshots': time {ts} outside [0, {t_final}]")
            snapshots.append(ts)

    if sample_dt > t_final:
        raise ConfigError(
            f"{where_of.get('sample_dt', 'default')}: key 'sample_dt': "
            f"must be <= T={t_final}, got {sample_dt}")
    if mode == "closed-loop" and gamma is None:
        raise ConfigError("key 'gamma': required in closed-loop mode, not set")

    grid_h = 1.0 / n
    integ = IntegratorConfig(rtol=rtol, atol=atol,
                             dt_init=min(1e-3, grid_h / math.sqrt(k)))
    return ScenarioConfig(
        params=PhysicalParams(k=k, beta=beta),
        n=n,
        obs=ObserverConfig(alpha=alpha, zhat0=profiles["zhat0"],
                           zhat1=profiles["zhat1"]),
        gamma=gamma, h_star=h_star, psi=psi, psi_scale=psi_scale,
        z0=profiles["z0"], z1=profiles["z1"],
        T=t_final, sample_dt=sample_dt, integrator=integ,
        mode=mode, snapshots=tuple(snapshots),
    )


def _state_from_flat(vec, m):
    plant = FieldState(z=vec[:m], v=vec[m:2 * m])
    observer = FieldState(z=vec[2 * m:3 * m], v=vec[3 * m:4 * m])
    return plant, observer


def run(config, unsafe=False):
    """Integrate the configured experiment and return its TimeSeriesRecord.

    Closed-loop runs are gated on the parameter-region check; unsafe=True
    bypasses the gate and watermarks the record as uncertified.
    """
    params = config.params
    grid = build_grid(config.n)
    m = grid.n_interior
    h = grid.h
    mode = config.mode

    uncertified = False
    if mode == "closed-loop":
        ctrl = config.controller()
        if not check_assumption2(params).holds:
            if not unsafe:
                raise ValueError(
                    f"parameters k={params.k}, beta={params.beta} fail the "
                    f"admissibility check (beta must be < "
                    f"{piecewise_beta_bound(params.k):.6g}); "
                    f"pass unsafe to run anyway")
            uncertified = True
    obs = config.obs

    z0 = sample_profile(config.z0, grid)
    v0 = sample_profile(config.z1, grid)
    if mode == "plant-only":
        y_init = np.concatenate([z0, v0])
    else:
        zh0 = sample_profile(obs.zhat0, grid)
        vh0 = sample_profile(obs.zhat1, grid)
        y_init = np.concatenate([z0, v0, zh0, vh0])

    def guard(f):
        # trial steps can wander into non-finite territory; signal a
        # rejection (inf derivative) instead of failing the whole run
        def wrapped(t, vec):
            with np.errstate(all="ignore"):
                try:
                    return f(t, vec)
                except ValueError:
                    return np.full(vec.size, np.inf)
        return wrapped

    if mode == "closed-loop":
        def f(t, vec):
            plant, observer = _state_from_flat(vec, m)
            s = ClosedLoopState(plant=plant, observer=observer, t=t)
            _y, _hh, _u, gp, go = loop_signals(s, params, ctrl, obs, grid)
            return np.concatenate([plant.v, rhs_field(plant, params, gp, grid),
                                   observer.v, rhs_field(observer, params, go, grid)])
    elif mode == "unforced":
        def f(t, vec):
            plant, observer = _state_from_flat(vec, m)
            return np.concatenate([
                plant.v, rhs_field(plant, params, plant.z[-1], grid),
                observer.v, rhs_field(observer, params, observer.z[-1], grid)])
    else:
        def f(t, vec):
            plant = FieldState(z=vec[:m], v=vec[m:2 * m])
            return np.concatenate([plant.v, rhs_field(plant, params, plant.z[-1], grid)])

    snap_index = {}
    for ts in config.snapshots:
        snap_index.setdefault(int(round(ts / config.sample_dt)), ts)

    rows = {name: [] for name in ("t", "H", "H_hat", "E", "u", "y")}
    snapshots = {}
    x_full = np.concatenate([[0.0], grid.interior_nodes(), [1.0]])
    sample_counter = [0]

    def signals_at(vec):
        if mode == "plant-only":
            plant = FieldState(z=vec[:m], v=vec[m:2 * m])
            gp = plant.z[-1]
            return plant, None, output_y(plant), 0.0, gp, None
        plant, observer = _state_from_flat(vec, m)
        if mode == "unforced":
            return (plant, observer, output_y(plant), 0.0,
                    plant.z[-1], observer.z[-1])
        s = ClosedLoopState(plant=plant, observer=observer, t=0.0)
        y, _hh, u, gp, go = loop_signals(s, params, ctrl, obs, grid)
        return plant, observer, y, u, gp, go

    def on_sample(t_j, vec):
        plant, observer, y, u, gp, go = signals_at(vec)
        h_val = hamiltonian(plant, params, grid, gp)
        if observer is None:
            hh_val = 0.0
            e_val = 0.0
        else:
            hh_val = hamiltonian(observer, params, grid, go)
            e_val = weighted_error(plant, observer, params, grid, (gp, go))
        rows["t"].append(t_j)
        rows["H"].append(h_val)
        rows["H_hat"].append(hh_val)
        rows["E"].append(e_val)
        rows["u"].append(u)
        rows["y"].append(y)
        j = sample_counter[0]
        sample_counter[0] += 1
        if j in snap_index:
            if observer is None:
                zh_full = np.zeros(m + 2)
                vh_full = np.zeros(m + 2)
            else:
                zh_full = np.concatenate([[0.0], observer.z, [go]])
                vh_full = np.concatenate([[0.0], observer.v, [observer.v[-1]]])
            snapshots[snap_index[j]] = {
                "x": x_full.copy(),
                "z": np.concatenate([[0.0], plant.z, [gp]]),
                "v": np.concatenate([[0.0], plant.v, [plant.v[-1]]]),
                "z_hat": zh_full,
                "v_hat": vh_full,
            }

    result = integrate(guard(f), y_init, (0.0, config.T), config.integrator,
                       sample_dt=config.sample_dt, on_sample=on_sample)

    if mode == "plant-only":
        final_plant = FieldState(z=result.y[:m], v=result.y[m:2 * m])
        final = ClosedLoopState(plant=final_plant,
                                observer=FieldState(z=np.zeros(m), v=np.zeros(m)),
                                t=result.t)
    else:
        plant, observer = _state_from_flat(result.y, m)
        final = ClosedLoopState(plant=plant, observer=observer, t=result.t)

    return TimeSeriesRecord(
        t=np.asarray(rows["t"]), H=np.asarray(rows["H"]),
        H_hat=np.asarray(rows["H_hat"]), E=np.asarray(rows["E"]),
        u=np.asarray(rows["u"]), y=np.asarray(rows["y"]),
        snapshots=snapshots, params=params, alpha=obs.alpha,
        gamma=config.gamma, h_star=config.h_star, mode=mode,
        uncertified=uncertified, final=final,
        stats={"n_accepted": result.n_accepted,
               "n_rejected": result.n_rejected,
               "n_samples": result.n_samples},
    )


def verify_certificate(record, cert, slack=1.05):
    """Check a certificate's three bounds against a recorded trajectory.

    (a) E(t) <= slack * M * E(0) * exp(-delta t), (b) |H - Hhat| <=
    c_corr * sqrt(E), (c) max(H, Hhat) <= H_max, all at every sample.
    Bounds (a) and (b) carry a small additive floor so the degenerate
    E(0) = 0 case stays meaningful.  Refuses records that were not produced
    under the certificate's parameters.
    """
    if record.mode != "closed-loop":
        raise ValueError(f"certificate applies to closed-loop records, got mode={record.mode!r}")
    if record.params is None or record.alpha is None or record.h_star is None:
        raise ValueError("record carries no parameter provenance; cannot verify")
    if (record.params.k != cert.params.k
            or record.params.beta != cert.params.beta
            or record.alpha != cert.alpha
            or record.h_star != cert.h_star):
        raise ValueError(
            f"certificate/record mismatch: certificate has "
            f"(k={cert.params.k}, beta={cert.params.beta}, alpha={cert.alpha}, "
            f"h_star={cert.h_star}), record has (k={record.params.k}, "
            f"beta={record.params.beta}, alpha={record.alpha}, h_star={record.h_star})")
    t = np.asarray(record.t, dtype=float)
    if t.size < 3:
        raise ValueError(f"insufficient data: need at least 3 samples, got {t.size}")

    e_arr = np.asarray(record.E, dtype=float)
    h_arr = np.asarray(record.H, dtype=float)
    hh_arr = np.asarray(record.H_hat, dtype=float)
    floor = 1e-10 * max(1.0, float(h_arr[0]))

    bound_a = slack * cert.m_const * e_arr[0] * np.exp(-cert.delta_rate * t) + floor
    margin_a = float(np.max(e_arr / bound_a))
    bound_b = cert.c_corr * np.sqrt(np.maximum(e_arr, 0.0)) + floor
    margin_b = float(np.max(np.abs(h_arr - hh_arr) / bound_b))
    margin_c = float(max(np.max(h_arr), np.max(hh_arr)) / cert.h_max)

    return CertificateCheck(
        ok_decay=margin_a <= 1.0, ok_mismatch=margin_b <= 1.0,
        ok_energy=margin_c <= 1.0, margin_decay=margin_a,
        margin_mismatch=margin_b, margin_energy=margin_c,
        slack=slack, floor=floor,
    )


def band_times(t, h_arr, h_star):
    """(first entry, settle time) for the band |H - H*| <= 0.05 H*; nan if never."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(np.asarray(h_arr, dtype=float) - h_star) <= 0.05 * h_star
    if not inside.any():
        return (math.nan, math.nan)
    entry = float(t[int(np.argmax(inside))])
    outside_idx = np.nonzero(~inside)[0]
    if outside_idx.size == 0:
        return (entry, float(t[0]))
    last_out = int(outside_idx[-1])
    if last_out + 1 >= t.size:
        return (entry, math.nan)
    return (entry, float(t[last_out + 1]))


def gamma_sweep(base, gammas, unsafe=False, keep_records=False):
    """Run the closed loop once per gamma and summarize each run.

    Returns SweepRow entries in input order; a failed run is recorded in its
    row's error field and the sweep continues.  With keep_records=True the
    return value is (rows, {gamma: record}) for callers that also want the
    full trajectories.
    """
    gammas = list(gammas)
    if not gammas:
        raise ValueError("gamma list must be nonempty")
    for g in gammas:
        if not (math.isfinite(g) and g > 0):
            raise ValueError(f"gamma values must be finite and > 0, got {g}")

    records = {}
    out = []
    for g in gammas:
        cfg = replace(base, gamma=float(g), mode="closed-loop")
        try:
            rec = run(cfg, unsafe=unsafe)
        except (ValueError, RuntimeError) as exc:
            out.append(SweepRow(gamma=float(g), h_err_final=math.nan,
                                band_entry=math.nan, band_settle=math.nan,
                                e_ratio=math.nan, error=str(exc)))
            continue
        records[float(g)] = rec
        entry, settle = band_times(rec.t, rec.H, cfg.h_star)
        e0 = float(rec.E[0])
        e_ratio = float(rec.E[-1] / e0) if e0 > 0 else math.nan
        out.append(SweepRow(
            gamma=float(g),
            h_err_final=float(abs(rec.H[-1] - cfg.h_star)),
            band_entry=entry, band_settle=settle,
            e_ratio=e_ratio, error=None,
        ))
    if keep_records:
        return out, records
    return out
