"""Command-line driver: ``solve``, ``reduced``, ``spectrum`` and ``sweep``.

Exit codes: 0 success, 2 configuration or validation error, 3 numerical failure.
Settings come from built-in defaults, then a ``key = value`` config file,
then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    equilibrium_spectrum,
    g_sweep,
    slowest_rate,
    SweepError,
)
from .energy import el_residual
from .minimize import SolveOptions, SolverError, minimize, recommended_grid
from .model import Equilibrium, Params, Profile
from .reduced import invariant_inner, invariant_outer, reduced_orbit

log = logging.getLogger("domainwalls")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICS = 0, 2, 3

DEFAULT_G_LIST = (2.0, 1.5, 1.2, 1.1, 1.05, 1.02, 1.01)
DEFAULTS: dict[str, object] = {
    "eps": 1.0,
    "g": 2.0,
    "L": 30.0,
    "n": 3000,
    "grad_tol": 1e-8,
    "max_iters": 50_000,
    "init": "testfn",
    "out_dir": ".",
    "g_list": ",".join(repr(v) for v in DEFAULT_G_LIST),
}
_CASTS = {"eps": float, "g": float, "L": float, "n": int, "grad_tol": float, "max_iters": int}

PROFILE_HEADER = ["x", "A", "B", "A_prime", "B_prime", "el_resA", "el_resB"]
REDUCED_HEADER = ["x", "A", "B", "B_prime", "invariant_inner", "invariant_outer"]
SWEEP_HEADER = ["g", "min_energy", "testfn_bound", "circle_sup", "converged"]
SWEEP_PLOT_HEADER = ["g", "x", "A", "B"]


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    params: dict
    options: dict
    outputs: list[str] = field(default_factory=list)
    wall_time_seconds: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        payload = asdict(self)
        extra = payload.pop("extra")
        payload.update(extra)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def fmt(v: float) -> str:
    return format(float(v), ".17g")


# -- configuration ---------------------------------------------------------------


def read_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve_settings(args: argparse.Namespace) -> dict[str, object]:
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key, cast in _CASTS.items():
        try:
            settings[key] = cast(settings[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {settings[key]!r}") from exc
    return settings


def make_params(s: dict[str, object]) -> Params:
    try:
        return Params(eps=s["eps"], g=s["g"], L=s["L"], n=s["n"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_g_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid g list {text!r}") from exc
    if not values:
        raise ConfigError("g list is empty")
    if any(not v > 1 for v in values):
        raise ConfigError("every g in the g list must satisfy g > 1")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigError("g list must be strictly decreasing")
    return values


def read_profile_csv(path: str | Path) -> Profile:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        x = np.array([float(r["x"]) for r in rows])
        A = np.array([float(r["A"]) for r in rows])
        B = np.array([float(r["B"]) for r in rows])
        return Profile(x, A, B)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from exc


def make_options(s: dict[str, object]) -> SolveOptions:
    init = str(s["init"])
    if init.startswith("file:"):
        init_value: str | Profile = read_profile_csv(init[len("file:"):])
    elif init in ("testfn", "reduced"):
        init_value = init
    else:
        raise ConfigError(f"--init must be testfn, reduced or file:PATH, got {init!r}")
    try:
        return SolveOptions(grad_tol=s["grad_tol"], max_iters=s["max_iters"], init=init_value)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def options_echo(s: dict[str, object], opts: SolveOptions) -> dict:
    return {
        "grad_tol": opts.grad_tol,
        "max_iters": opts.max_iters,
        "memory": opts.memory,
        "init": str(s["init"]),
    }


# -- outputs ---------------------------------------------------------------------


def _central_diff(v: np.ndarray, h: float, left: float, right: float) -> np.ndarray:
    ve = np.concatenate(([left], v, [right]))
    return (ve[2:] - ve[:-2]) / (2.0 * h)


def write_profile_csv(path: Path, p: Profile, params: Params) -> None:
    h = p.h
    dA = _central_diff(p.A, h, 1.0, 0.0)
    dB = _central_diff(p.B, h, 0.0, 1.0)
    res = el_residual(p, params)
    n = p.n
    resA = [""] * (n + 1)
    resB = [""] * (n + 1)
    for i, v in enumerate(res.resA, start=2):
        resA[i] = fmt(v)
    for i, v in enumerate(res.resB, start=1):
        resB[i] = fmt(v)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_HEADER)
        for i in range(n + 1):
            w.writerow([fmt(p.x[i]), fmt(p.A[i]), fmt(p.B[i]), fmt(dA[i]), fmt(dB[i]), resA[i], resB[i]])


def cmd_solve(s: dict[str, object], out: Path) -> int:
    params = make_params(s)
    opts = make_options(s)
    t0 = time.perf_counter()
    try:
        res = minimize(params, opts)
    except SolverError as exc:
        log.error("%s", exc)
        res = getattr(exc, "result", None)
        if res is None:
            return EXIT_NUMERICS
    profile_path = out / "profile.csv"
    write_profile_csv(profile_path, res.profile, params)
    manifest = RunManifest(
        command="solve",
        params=asdict(params),
        options=options_echo(s, opts),
        outputs=[str(profile_path)],
        wall_time_seconds=time.perf_counter() - t0,
        converged=res.converged,
        extra={
            "energy": res.energy.as_dict(),
            "grad_norm": res.grad_norm,
            "iterations": res.iterations,
            "pin_shift": res.shift,
            "el_residual_sup": el_residual(res.profile, params).sup_norm,
            "status": res.message,
        },
    )
    manifest.outputs.append(str(out / "manifest.json"))
    manifest.write(out / "manifest.json")
    return EXIT_OK if res.converged else EXIT_NUMERICS


def cmd_reduced(s: dict[str, object], out: Path) -> int:
    params = make_params(s)
    t0 = time.perf_counter()
    orbit = reduced_orbit(params.g)
    x = np.union1d(params.grid(), [orbit.x_junction])
    A, B, dB = orbit.A(x), orbit.B(x), orbit.dB(x)
    inner_val = invariant_inner(B, dB, params.g)
    outer_val = invariant_outer(B, dB)
    path = out / "reduced.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REDUCED_HEADER)
        for i in range(x.size):
            on_inner = x[i] <= orbit.x_junction
            on_outer = x[i] >= orbit.x_junction
            w.writerow([
                fmt(x[i]), fmt(A[i]), fmt(B[i]), fmt(dB[i]),
                fmt(inner_val[i]) if on_inner else "",
                fmt(outer_val[i]) if on_outer else "",
            ])
    manifest = RunManifest(
        command="reduced",
        params=asdict(params),
        options={},
        outputs=[str(path), str(out / "manifest.json")],
        wall_time_seconds=time.perf_counter() - t0,
        extra={
            "x_junction": orbit.x_junction,
            "junction_slope": orbit.junction_slope,
            "pin_value": orbit.pin_value,
        },
    )
    manifest.write(out / "manifest.json")
    return EXIT_OK


def spectrum_payload(params: Params) -> dict:
    eqs = {}
    for which in Equilibrium:
        rep = equilibrium_spectrum(params, which)
        eqs[which.value] = {
            "point": list(which.point),
            "a_roots": [[float(z.real), float(z.imag)] for z in rep.a_roots],
            "b_roots": [float(v) for v in rep.b_roots],
            "hyperbolic": rep.hyperbolic,
            "slowest_rate": rep.slowest_rate,
        }
    h_max = params.h
    L_rec, n_rec = recommended_grid(params.eps, params.g, h_max)
    return {
        "params": asdict(params),
        "equilibria": eqs,
        "slowest_rate": slowest_rate(params.eps, params.g),
        "recommended": {
            "L": L_rec,
            "n": n_rec,
            "h_max_resolution": 2.0 * math.pi / 16.0 * (params.eps / (params.g - 1.0)) ** 0.25,
        },
    }


def cmd_spectrum(s: dict[str, object], out: Path) -> int:
    params = make_params(s)
    path = out / "spectrum.json"
    path.write_text(json.dumps(spectrum_payload(params), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return EXIT_OK


def cmd_sweep(s: dict[str, object], out: Path) -> int:
    params = make_params(s)
    opts = make_options(s)
    g_list = parse_g_list(s["g_list"])
    t0 = time.perf_counter()
    sweep_path = out / "sweep.csv"
    plot_path = out / "sweep_plot.csv"
    grids: list[dict] = []
    with open(sweep_path, "w", newline="", encoding="utf-8") as fs, \
            open(plot_path, "w", newline="", encoding="utf-8") as fp:
        ws = csv.writer(fs, lineterminator="\n")
        wp = csv.writer(fp, lineterminator="\n")
        ws.writerow(SWEEP_HEADER)
        wp.writerow(SWEEP_PLOT_HEADER)

        def on_record(rec):
            ws.writerow([fmt(rec.g), fmt(rec.min_energy), fmt(rec.testfn_bound),
                         fmt(rec.circle_sup), str(rec.converged).lower()])
            fs.flush()
            prof = rec.result.profile
            for xv, av, bv in zip(prof.x, prof.A, prof.B):
                wp.writerow([fmt(rec.g), fmt(xv), fmt(av), fmt(bv)])
            fp.flush()
            grids.append({"g": rec.g, "L": rec.result.params.L, "n": rec.result.params.n,
                          "iterations": rec.result.iterations, "grad_norm": rec.result.grad_norm})

        failed = None
        try:
            g_sweep(params.eps, g_list, opts, h_max=params.h, on_record=on_record)
        except SweepError as exc:
            log.error("%s", exc)
            failed = str(exc)
    manifest = RunManifest(
        command="sweep",
        params=asdict(params),
        options={**options_echo(s, opts), "g_list": g_list},
        outputs=[str(sweep_path), str(plot_path), str(out / "manifest.json")],
        wall_time_seconds=time.perf_counter() - t0,
        converged=failed is None,
        extra={"grids": grids, "error": failed},
    )
    manifest.write(out / "manifest.json")
    return EXIT_OK if failed is None else EXIT_NUMERICS


COMMANDS = {"solve": cmd_solve, "reduced": cmd_reduced, "spectrum": cmd_spectrum, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domainwalls",
        description="Heteroclinic domain-wall profiles of the real two-amplitude system.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float)
    common.add_argument("--g", type=float)
    common.add_argument("--L", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--grad-tol", dest="grad_tol", type=float)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--init", help="testfn, reduced or file:PATH")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--config", help="key = value file; flags take precedence")
    common.add_argument("--g-list", dest="g_list", help="comma-separated decreasing g values")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="minimize the energy at one (eps, g)")
    sub.add_parser("reduced", parents=[common], help="closed-form eps = 0 orbit")
    sub.add_parser("spectrum", parents=[common], help="linearization at both equilibria")
    sub.add_parser("sweep", parents=[common], help="warm-started chain of solves as g -> 1+")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = resolve_settings(args)
        out = Path(str(settings["out_dir"]))
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](settings, out)
    except ConfigError as exc:
        print(f"domainwalls {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
