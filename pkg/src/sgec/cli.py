"""Command-line interface.

Subcommands: check-params (admissibility), certificate (decay constants),
simulate (one run to CSV, optionally with SVG figures), sweep (gain sweep
summary), convergence (temporal/spatial order studies), plot (CSV to SVG).

Exit codes: 0 success, 1 domain failure (inadmissible parameters, failed
bound, run failure, I/O), 2 usage or config-parse error.
"""

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .admissibility import (check_assumption2, decay_certificate,
                            optimize_epsilon, piecewise_beta_bound)
from .core import FieldState, PhysicalParams, build_grid, sample_profile
from .functionals import hamiltonian
from .integrator import integrate_fixed
from .scenario import (ConfigError, PRESETS, TimeSeriesRecord, band_times,
                       gamma_sweep, load_config, run)

__all__ = ["dispatch", "main", "emit_csv", "read_csv"]

CSV_HEADER = "t,H,H_hat,E,u,y"
SNAP_HEADER = "x,z,v,z_hat,v_hat"


def _fmt(x):
    # 17 significant digits: enough for exact float round-trips
    return format(float(x), ".17g")


def _record_lines(record):
    lines = [CSV_HEADER]
    for i in range(len(record.t)):
        lines.append(",".join(_fmt(col[i]) for col in
                              (record.t, record.H, record.H_hat,
                               record.E, record.u, record.y)))
    if record.uncertified:
        lines.append("# uncertified")
    return lines


def emit_csv(record, destination):
    """Write a record as CSV (LF endings); returns the byte count written.

    destination is a path or a text stream.  Snapshots go to sibling files
    <stem>.snap<t>.csv, which requires a path destination.
    """
    if len(record.t) == 0:
        raise ValueError("record is empty")
    payload = "\n".join(_record_lines(record)) + "\n"
    total = len(payload.encode("utf-8"))

    if hasattr(destination, "write"):
        if record.snapshots:
            raise ValueError("snapshot output requires a file destination")
        destination.write(payload)
        return total

    path = os.fspath(destination)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(payload)
    stem = os.path.splitext(path)[0]
    for ts in sorted(record.snapshots):
        snap = record.snapshots[ts]
        lines = [SNAP_HEADER]
        for i in range(snap["x"].size):
            lines.append(",".join(_fmt(snap[c][i])
                                  for c in ("x", "z", "v", "z_hat", "v_hat")))
        snap_payload = "\n".join(lines) + "\n"
        with open(f"{stem}.snap{ts:g}.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(snap_payload)
        total += len(snap_payload.encode("utf-8"))
    return total


def read_csv(source):
    """Read an emitted record CSV back into a TimeSeriesRecord.

    Only the sampled series and the uncertified watermark are recoverable;
    parameter provenance is not stored in the CSV.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    uncertified = False
    data_lines = []
    for line in text.splitlines():
        body = line.strip()
        if not body:
            continue
        if body.startswith("#"):
            if body.lstrip("#").strip() == "uncertified":
                uncertified = True
            continue
        data_lines.append(body)
    if not data_lines or data_lines[0] != CSV_HEADER:
        raise ValueError(f"not a record CSV (expected header {CSV_HEADER!r})")
    cols = [[] for _ in range(6)]
    for body in data_lines[1:]:
        parts = body.split(",")
        if len(parts) != 6:
            raise ValueError(f"malformed CSV row: {body!r}")
        for c, part in zip(cols, parts):
            c.append(float(part))
    arrays = [np.asarray(c, dtype=float) for c in cols]
    return TimeSeriesRecord(t=arrays[0], H=arrays[1], H_hat=arrays[2],
                            E=arrays[3], u=arrays[4], y=arrays[5],
                            uncertified=uncertified)


def _render_svg(record, path, log_e=False):
    """Render H/Hhat, E, and u time histories to an SVG file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 8.0))
    axes[0].plot(record.t, record.H, label="H")
    axes[0].plot(record.t, record.H_hat, "--", label="H estimate")
    axes[0].set_ylabel("energy")
    axes[0].legend(loc="best")
    axes[1].plot(record.t, record.E, color="tab:red")
    if log_e:
        axes[1].set_yscale("log")
    axes[1].set_ylabel("E")
    axes[2].plot(record.t, record.u, color="tab:green")
    axes[2].set_ylabel("u")
    axes[2].set_xlabel("t")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _resolve_config_text(name):
    if name in PRESETS:
        return PRESETS[name]
    with open(name, "r", encoding="utf-8") as fh:
        return fh.read()


def _collect_overrides(ns):
    overrides = {}
    for item in ns.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if getattr(ns, "gamma", None) is not None:
        overrides["gamma"] = str(ns.gamma)
    return overrides


def cmd_check_params(ns):
    params = PhysicalParams(k=ns.k, beta=ns.beta)
    report = check_assumption2(params)
    print(f"eta = {_fmt(report.eta) if math.isfinite(report.eta) else 'inf'}")
    print(f"case: {report.case_label}")
    if report.holds:
        lo, hi = report.epsilon_range
        print("admissible: yes")
        print(f"epsilon range: ({_fmt(lo)}, {_fmt(hi)})")
        return 0
    bound = piecewise_beta_bound(params.k)
    print(f"admissible: no (beta < {bound:.6g} is necessary)")
    return 1


def cmd_certificate(ns):
    params = PhysicalParams(k=ns.k, beta=ns.beta)
    if ns.epsilon is None:
        eps, cert = optimize_epsilon(params, alpha=ns.alpha, e0=ns.e0,
                                     h_star=ns.h_star, h0=ns.h0)
        print(f"epsilon = {_fmt(eps)}  (optimized)")
    else:
        alpha = ns.alpha if ns.alpha is not None else 1.0 / ns.epsilon
        cert = decay_certificate(params, ns.epsilon, alpha, ns.e0,
                                 h_star=ns.h_star, h0=ns.h0)
        print(f"epsilon = {_fmt(cert.epsilon)}")
    print(f"alpha = {_fmt(cert.alpha)}")
    print(f"delta1 = {_fmt(cert.delta1)}")
    print(f"delta2 = {_fmt(cert.delta2)}")
    print(f"delta3 = {_fmt(cert.delta3)}")
    print(f"k0 = {_fmt(cert.k0)}")
    print(f"M = {_fmt(cert.m_const)}")
    print(f"delta = {_fmt(cert.delta_rate)}")
    print(f"H_max = {_fmt(cert.h_max)}")
    print(f"C1 = {_fmt(cert.c1_const)}")
    print(f"C2 = {_fmt(cert.c2_const)}")
    print(f"c_corr = {_fmt(cert.c_corr)}")
    return 0


def cmd_simulate(ns):
    cfg = load_config(_resolve_config_text(ns.config), _collect_overrides(ns))
    if ns.plot and not ns.out:
        raise ConfigError("--plot requires --out (figures are written beside the CSV)")
    record = run(cfg, unsafe=ns.unsafe)
    if ns.out:
        nbytes = emit_csv(record, ns.out)
        print(f"wrote {ns.out} ({len(record.t)} samples, {nbytes} bytes)",
              file=sys.stderr)
        if ns.plot:
            fig_path = os.path.splitext(ns.out)[0] + ".svg"
            _render_svg(record, fig_path, log_e=ns.log_e)
            print(f"wrote {fig_path}", file=sys.stderr)
    else:
        emit_csv(record, sys.stdout)
    return 0


def cmd_sweep(ns):
    try:
        gammas = [float(tok) for tok in ns.gammas.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--gammas expects comma-separated numbers, got {ns.gammas!r}") from None
    if not gammas:
        raise ConfigError("--gammas must list at least one gain")
    overrides = _collect_overrides(ns)
    # closed-loop configs require an explicit gamma at parse time; the sweep
    # replaces it per run, so seed with the first entry
    overrides.setdefault("gamma", repr(gammas[0]))
    cfg = load_config(_resolve_config_text(ns.config), overrides)
    rows, records = gamma_sweep(cfg, gammas, unsafe=ns.unsafe, keep_records=True)

    lines = ["gamma,h_err_final,band_entry,band_settle,e_ratio,error"]
    for row in rows:
        lines.append(",".join([
            _fmt(row.gamma), _fmt(row.h_err_final), _fmt(row.band_entry),
            _fmt(row.band_settle), _fmt(row.e_ratio),
            "" if row.error is None else row.error.replace(",", ";"),
        ]))
    payload = "\n".join(lines) + "\n"
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
        print(f"wrote {ns.out}", file=sys.stderr)
    else:
        sys.stdout.write(payload)
    if ns.runs_prefix:
        for g, record in sorted(records.items()):
            path = f"{ns.runs_prefix}gamma{g:g}.csv"
            emit_csv(record, path)
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_convergence(ns):
    do_temporal = ns.temporal or not ns.spatial
    do_spatial = ns.spatial or not ns.temporal
    if do_temporal:
        # y' = -y over [0, 2]; exact solution exp(-2)
        exact = math.exp(-2.0)
        print("temporal study (y' = -y, fixed steps):")
        print("  dt        err(order5)   err(order4)")
        errs5, errs4 = [], []
        dts = [0.2, 0.1, 0.05, 0.025]
        for dt in dts:
            steps = round(2.0 / dt)
            y5 = integrate_fixed(lambda t, y: -y, np.array([1.0]), (0.0, 2.0),
                                 steps, order=5)
            y4 = integrate_fixed(lambda t, y: -y, np.array([1.0]), (0.0, 2.0),
                                 steps, order=4)
            errs5.append(abs(float(y5[0]) - exact))
            errs4.append(abs(float(y4[0]) - exact))
            print(f"  {dt:<8g}  {errs5[-1]:.6e}  {errs4[-1]:.6e}")
        p5 = [math.log2(errs5[i] / errs5[i + 1]) for i in range(len(dts) - 1)]
        p4 = [math.log2(errs4[i] / errs4[i + 1]) for i in range(len(dts) - 1)]
        print(f"  observed order: {np.mean(p5):.2f} (order5), {np.mean(p4):.2f} (order4)")
    if do_spatial:
        try:
            n_list = [int(tok) for tok in ns.n_list.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"--n-list expects comma-separated integers, got {ns.n_list!r}") from None
        params = PhysicalParams(k=0.12, beta=0.02)
        print("spatial study (initial energy of the reference profile):")
        vals = []
        for n in n_list:
            grid = build_grid(n)
            z = sample_profile("paper", grid)
            state = FieldState(z=z, v=np.zeros(grid.n_interior))
            vals.append(hamiltonian(state, params, grid, z[-1]))
            print(f"  n={n:<7d} H0 = {_fmt(vals[-1])}")
        grid = build_grid(100_000)
        z = sample_profile("paper", grid)
        ref = hamiltonian(FieldState(z=z, v=np.zeros(grid.n_interior)),
                          params, grid, z[-1])
        print(f"  n=100000 reference H0 = {_fmt(ref)}")
        if len(vals) >= 3:
            num = vals[0] - vals[1]
            den = vals[1] - vals[2]
            if den != 0 and num / den > 0:
                print(f"  observed order: {math.log2(num / den):.2f}")
    return 0


def cmd_plot(ns):
    record = read_csv(ns.infile)
    _render_svg(record, ns.out, log_e=ns.log_e)
    print(f"wrote {ns.out}", file=sys.stderr)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sgec",
        description="Boundary energy control of the sine-Gordon equation: "
                    "simulation, certificates, and validation tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-params", help="check the admissibility inequalities")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_check_params)

    p = sub.add_parser("certificate", help="compute decay-certificate constants")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=None,
                   help="omit to optimize over the valid range")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--e0", type=float, default=0.0, help="initial weighted error E(0)")
    p.add_argument("--h-star", type=float, default=0.0, dest="h_star")
    p.add_argument("--h0", type=float, default=0.0, help="initial energy H(0)")
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("simulate", help="run one experiment and emit CSV")
    p.add_argument("--config", required=True,
                   help="config file path or preset name (e.g. paper-5.2)")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--plot", action="store_true",
                   help="also write <out stem>.svg figures")
    p.add_argument("--log-e", action="store_true", dest="log_e",
                   help="log scale for the E panel")
    p.add_argument("--unsafe", action="store_true",
                   help="run outside the admissible region (output watermarked)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a gamma sweep and summarize")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas", default="0.1,0.3,1,3",
                   help="comma-separated gains (default: 0.1,0.3,1,3)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", default=None, help="summary CSV path (default: stdout)")
    p.add_argument("--runs-prefix", default=None, dest="runs_prefix",
                   help="also write each run to <prefix>gamma<g>.csv")
    p.add_argument("--unsafe", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", help="temporal/spatial order studies")
    p.add_argument("--temporal", action="store_true")
    p.add_argument("--spatial", action="store_true")
    p.add_argument("--n-list", default="250,500,1000", dest="n_list")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("plot", help="render an emitted CSV to SVG")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--out", required=True)
    p.add_argument("--log-e", action="store_true", dest="log_e")
    p.set_defaults(func=cmd_plot)

    return parser


def dispatch(argv):
    """Parse argv and execute one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    return dispatch(sys.argv[1:] if argv is None else argv)
