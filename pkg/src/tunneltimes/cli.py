"""Command-line front end.

    tunneltimes dwell --E 0.09 --V0 0.1 --a 0 --b 15 --mass 0.067
    tunneltimes sweep --figure 2
    tunneltimes wavefunction --E 0.09 --V0 0.1 --a 0 --b 15 --mass 0.067 --samples 200 --xmin -20 --xmax 35
    tunneltimes packet --figure 5 --summary summary.json > trace.csv

Units are fixed: eV, nm, fs, electron masses.  Any flag may also come from a
``--config`` file of ``key = value`` lines (``#`` starts a comment); the key is
the flag name without dashes.  Precedence: flags, then config, then the
``--figure`` preset, then built-in defaults.

Exit status: 0 on success, 2 for usage errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .dwell import dwell_report
from .numerics import BracketError, NumericalFailure
from .propagator import SchemeInstability
from .scattering import BarrierSpec, InvalidInput, probability_flux, solve, evaluate
from .wavepacket import (
    InsufficientSpan,
    PacketSpec,
    WindowOverflow,
    expectation_trace,
    gaussian_spectrum,
    transmission_times,
    velocity_ceiling,
)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

SWEEP_COLUMNS = (
    "param", "E_eV", "d_nm", "T", "R", "tau_free_fs", "tau_tr_fs", "tau_ref_fs",
    "tau_buttiker_fs", "ratio_tr_free", "ratio_buttiker_free",
)
WAVEFUNCTION_COLUMNS = (
    "x_nm", "re_psi_tr", "im_psi_tr", "re_psi_ref", "im_psi_ref",
    "abs2_tr", "abs2_ref", "abs2_full", "flux_tr", "flux_ref",
)
PACKET_COLUMNS = ("t_fs", "x_mean_nm", "norm", "p_mean", "p_var", "K_eV", "V_eV", "H_eV")

# Parameter sets of the figure presets.  Sweep ranges are chosen to cover
# the plotted behaviour; each figure fixes only V0, d or E, and the mass.
FIGURES = {
    1: dict(V0=-0.1, a=0.0, b=30.0, mass=0.067, param="energy", start=0.001, stop=0.3, steps=300),
    2: dict(V0=0.1, a=0.0, b=15.0, mass=0.067, param="energy", start=0.001, stop=0.3, steps=300),
    3: dict(V0=0.1, E=0.11, a=0.0, mass=0.067, param="width", start=0.1, stop=60.0, steps=300),
    4: dict(V0=0.1, E=0.09, a=0.0, mass=0.067, param="width", start=0.1, stop=60.0, steps=300),
    5: dict(V0=0.2, a=200.0, b=215.0, mass=0.067, x0=0.0, halfwidth=10.0, E0=0.05, tmax=1200.0, tstep=1.0),
}
SWEEP_FIGURES = (1, 2, 3, 4)
PACKET_FIGURES = (5,)


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """Shortest round-trip text for a number."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def finite_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

# dest -> (type, default); defaults of None mean "required"
BARRIER_OPTS = {"V0": (finite_float, None), "a": (finite_float, None), "b": (finite_float, None),
                "mass": (finite_float, None)}
OPTIONS = {
    "dwell": {"E": (finite_float, None), **BARRIER_OPTS},
    "sweep": {
        **BARRIER_OPTS,
        "E": (finite_float, None),
        "param": (str, None),
        "start": (finite_float, None),
        "stop": (finite_float, None),
        "steps": (positive_int, None),
        "columns": (str, ",".join(SWEEP_COLUMNS)),
    },
    "wavefunction": {
        "E": (finite_float, None),
        **BARRIER_OPTS,
        "samples": (positive_int, None),
        "xmin": (finite_float, None),
        "xmax": (finite_float, None),
    },
    "packet": {
        "x0": (finite_float, None),
        "halfwidth": (finite_float, None),
        "E0": (finite_float, None),
        **BARRIER_OPTS,
        "tmax": (finite_float, None),
        "tstep": (finite_float, 0.0),
        "component": (str, "tr"),
        "modes": (positive_int, 4096),
    },
}
CHOICES = {"param": ("energy", "width"), "component": ("tr", "ref", "full")}


def build_parser():
    parser = argparse.ArgumentParser(prog="tunneltimes", description="Dwell and transmission times for a rectangular barrier or well.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "dwell": "single-energy dwell-time report (JSON)",
        "sweep": "dwell times over an energy or width range (CSV)",
        "wavefunction": "sampled subensemble wave functions and fluxes (CSV)",
        "packet": "Gaussian packet trace (CSV) and transmission-time summary (JSON)",
    }
    for name, opts in OPTIONS.items():
        p = sub.add_parser(name, help=helps[name])
        for dest, (typ, default) in opts.items():
            kw = dict(dest=dest, type=typ, default=None)
            if dest in CHOICES:
                kw["choices"] = CHOICES[dest]
            flag = "--from" if dest == "start" else "--to" if dest == "stop" else f"--{dest}"
            p.add_argument(flag, **kw)
        p.add_argument("--config", type=Path, help="key = value file supplying any of the flags above")
        p.add_argument("--output", "-o", type=Path, help="write the main output here instead of stdout")
        if name == "sweep":
            p.add_argument("--figure", type=int, choices=SWEEP_FIGURES)
        if name == "packet":
            p.add_argument("--figure", type=int, choices=PACKET_FIGURES)
            p.add_argument("--summary", type=Path, help="write the JSON summary here (default: stderr)")
    return parser


def read_config(path: Path) -> dict[str, str]:
    out = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key in out:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


_CONFIG_ALIASES = {"from": "start", "to": "stop"}


def resolve(args) -> dict:
    """Merge flags, config file, preset and defaults into one value per option."""
    opts = OPTIONS[args.command]
    merged = {}
    preset = FIGURES.get(getattr(args, "figure", None) or 0, {})
    for dest, (typ, default) in opts.items():
        if default is not None:
            merged[dest] = default
    for dest, value in preset.items():
        if dest in opts:
            merged[dest] = value
    if args.config is not None:
        for key, text in read_config(args.config).items():
            dest = _CONFIG_ALIASES.get(key, key)
            if dest not in opts:
                raise UsageError(f"unknown config key {key!r} for '{args.command}'")
            typ = opts[dest][0]
            try:
                value = typ(text)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}")
            if dest in CHOICES and value not in CHOICES[dest]:
                raise UsageError(f"config key {key!r} must be one of {CHOICES[dest]}")
            merged[dest] = value
    for dest in opts:
        value = getattr(args, dest)
        if value is not None:
            merged[dest] = value
    return merged


def require(values, *names):
    missing = [n for n in names if values.get(n) is None]
    if missing:
        flags = ", ".join("--" + {"start": "from", "stop": "to"}.get(n, n) for n in missing)
        raise UsageError(f"missing required value(s): {flags}")


def barrier_from(values) -> BarrierSpec:
    require(values, "V0", "a", "b", "mass")
    return BarrierSpec(values["V0"], values["a"], values["b"], values["mass"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def dwell_document(energy, barrier: BarrierSpec) -> dict:
    r = dwell_report(energy, barrier)
    return {
        "E_eV": float(energy),
        "V0_eV": barrier.v0,
        "d_nm": barrier.d,
        "mass_me": barrier.mass,
        "T": r.t_coef,
        "R": r.r_coef,
        "tau_free_fs": r.tau_free,
        "tau_tr_fs": r.tau_tr,
        "tau_ref_fs": r.tau_ref,
        "tau_buttiker_fs": r.tau_buttiker,
        "regime": r.regime.value,
        "empty_subensemble_flag": r.empty_subensemble,
    }


def cmd_dwell(values) -> str:
    require(values, "E")
    doc = dwell_document(values["E"], barrier_from(values))
    return json.dumps(doc, indent=2) + "\n"


def sweep_rows(values):
    """Rows of the sweep table, in increasing order of the swept parameter."""
    require(values, "param", "start", "stop", "steps", "V0", "a", "mass")
    lo, hi, n = values["start"], values["stop"], values["steps"]
    if not lo < hi:
        raise UsageError("--from must be smaller than --to")
    if n < 2:
        raise UsageError("--steps must be at least 2")
    grid = np.linspace(lo, hi, n)
    rows = []
    for p in grid:
        if values["param"] == "energy":
            barrier = barrier_from(values)
            energy = p
        else:
            require(values, "E")
            if p <= 0:
                raise UsageError("width sweep must stay at d > 0")
            barrier = BarrierSpec(values["V0"], values["a"], values["a"] + p, values["mass"])
            energy = values["E"]
        doc = dwell_document(energy, barrier)
        rows.append({
            "param": p,
            "E_eV": doc["E_eV"],
            "d_nm": doc["d_nm"],
            "T": doc["T"],
            "R": doc["R"],
            "tau_free_fs": doc["tau_free_fs"],
            "tau_tr_fs": doc["tau_tr_fs"],
            "tau_ref_fs": doc["tau_ref_fs"],
            "tau_buttiker_fs": doc["tau_buttiker_fs"],
            "ratio_tr_free": doc["tau_tr_fs"] / doc["tau_free_fs"],
            "ratio_buttiker_free": doc["tau_buttiker_fs"] / doc["tau_free_fs"],
        })
    return rows


def write_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def cmd_sweep(values) -> str:
    columns = [c.strip() for c in values["columns"].split(",") if c.strip()]
    unknown = [c for c in columns if c not in SWEEP_COLUMNS]
    if unknown or not columns:
        raise UsageError(f"unknown column(s) {unknown}; available: {','.join(SWEEP_COLUMNS)}")
    # keep the documented column order
    columns = [c for c in SWEEP_COLUMNS if c in columns]
    return write_csv(columns, sweep_rows(values))


def cmd_wavefunction(values) -> str:
    require(values, "E", "samples", "xmin", "xmax")
    if values["samples"] < 2:
        raise UsageError("--samples must be at least 2")
    if not values["xmin"] < values["xmax"]:
        raise UsageError("--xmin must be smaller than --xmax")
    barrier = barrier_from(values)
    _, amps = solve(values["E"], barrier)
    x = np.linspace(values["xmin"], values["xmax"], values["samples"])
    tr = evaluate("tr", x, barrier, amps)[0]
    ref = evaluate("ref", x, barrier, amps)[0]
    ftr = probability_flux("tr", x, barrier, amps)
    fref = probability_flux("ref", x, barrier, amps)
    rows = [
        {
            "x_nm": x[i], "re_psi_tr": tr[i].real, "im_psi_tr": tr[i].imag,
            "re_psi_ref": ref[i].real, "im_psi_ref": ref[i].imag,
            "abs2_tr": abs(tr[i]) ** 2, "abs2_ref": abs(ref[i]) ** 2, "abs2_full": abs(tr[i] + ref[i]) ** 2,
            "flux_tr": ftr[i], "flux_ref": fref[i],
        }
        for i in range(x.size)
    ]
    return write_csv(WAVEFUNCTION_COLUMNS, rows)


def _json_number(x):
    return None if x is None or not math.isfinite(x) else float(x)


def cmd_packet(values) -> tuple[str, str]:
    require(values, "x0", "halfwidth", "E0", "tmax")
    barrier = barrier_from(values)
    spec = PacketSpec(values["x0"], values["halfwidth"], values["E0"], values["mass"])
    if not values["tmax"] > 0:
        raise UsageError("--tmax must be positive")
    step = values["tstep"]
    if not step > 0:
        # free-flight displacement of the packet centre of at most 1 nm per step
        step = 1.0 / (barrier.velocity_scale() * spec.k0)
    times = np.arange(0.0, values["tmax"] + 0.5 * step, step)
    packet = gaussian_spectrum(spec, n_modes=values["modes"])
    comp = values["component"]
    trace = expectation_trace(comp, packet, barrier, times)
    csv_text = write_csv(PACKET_COLUMNS, (dict(zip(PACKET_COLUMNS, row)) for row in trace.rows()))
    summary = {
        "exact_time_fs": None,
        "asymptotic_time_fs": None,
        "tau_free_fs": None,
        "truncated_weight": packet.truncated_weight,
        "max_H_drift": trace.max_h_drift,
    }
    if comp == "tr":
        tt = transmission_times(trace, barrier)
        summary.update(
            exact_time_fs=tt.exact_time,
            asymptotic_time_fs=tt.asymptotic_time,
            tau_free_fs=tt.tau_free_ref,
            t_enter_fs=tt.t_enter,
            t_exit_fs=tt.t_exit,
            asymptotic_velocity_nm_fs=tt.asymptotic_velocity,
        )
    summary.update(
        component=comp,
        truncation_warning=packet.truncation_warning,
        spectral_norm=trace.spectral_norm,
        window_nm=list(trace.window),
        leaked_fraction=trace.leaked_fraction,
        velocity_ceiling_nm_fs=velocity_ceiling(barrier),
    )
    summary = {k: (_json_number(v) if isinstance(v, float) else v) for k, v in summary.items()}
    return csv_text, json.dumps(summary, indent=2) + "\n"


def _emit(text, path: Path | None, stream):
    if path is None:
        stream.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = resolve(args)
        if args.command == "dwell":
            _emit(cmd_dwell(values), args.output, sys.stdout)
        elif args.command == "sweep":
            _emit(cmd_sweep(values), args.output, sys.stdout)
        elif args.command == "wavefunction":
            _emit(cmd_wavefunction(values), args.output, sys.stdout)
        else:
            csv_text, summary = cmd_packet(values)
            _emit(csv_text, args.output, sys.stdout)
            _emit(summary, args.summary, sys.stderr)
    except (UsageError, InvalidInput) as exc:
        parser.print_usage(sys.stderr)
        print(f"tunneltimes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, BracketError, WindowOverflow, InsufficientSpan, SchemeInstability) as exc:
        print(f"tunneltimes: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
