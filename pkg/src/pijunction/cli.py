"""Command-line front end: ``pijunction <command> [flags]``.

Every command resolves its parameters as flags > config file section >
defaults, writes CSV data files into the output directory and finishes with
``manifest.json`` listing each file with its SHA-256 digest.  Timestamps are
only recorded with ``--timestamps`` so that reruns are byte-identical.

Config files are INI-style, one section per command::

    [zero-modes]
    mu = 0.1
    N = 60

Exit status: 0 on success, 1 when the computation (or any sweep point) failed,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import baths, dephasing, ising, modes, rg, wire

MANIFEST_SCHEMA = "pijunction.manifest/1"
OUTPUT_ENV = "PIJ_OUTPUT_DIR"
DEFAULT_OUTPUT = "pij_output"


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    kind: type
    default: object
    check: object = None  # callable(value) -> error text or None
    help: str = ""


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _even_n(v):
    return None if v >= 4 and v % 2 == 0 else "must be an even integer >= 4"


def _choice(*opts):
    def check(v):
        return None if v in opts else f"must be one of {', '.join(opts)}"
    return check


def _floats(raw) -> tuple[float, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(float(x) for x in raw)
    return tuple(float(x) for x in str(raw).split(",") if x.strip())


def _ints(raw) -> tuple[int, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(int(x) for x in raw)
    return tuple(int(x) for x in str(raw).split(",") if x.strip())


_WIRE = {
    "profile": Param(str, "short", _choice("uniform", "short", "long"), "pairing profile"),
    "N": Param(int, 40, _even_n, "number of sites"),
    "gamma": Param(float, 1.0, None, "bulk pairing"),
    "t": Param(float, 0.5, None, "junction tunneling (normal hopping for long)"),
    "upsilon": Param(float, 0.2, _nonneg, "junction transition pairing"),
    "mu": Param(float, 0.2, None, "chemical potential"),
    "normal_length": Param(int, 4, _positive, "normal bonds of a long junction"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "spectrum": dict(_WIRE),
    "zero-modes": dict(_WIRE),
    "dephase": {
        "s": Param(float, 1.0, _positive, "spectral exponent"),
        "lam": Param(float, 1.0, _nonneg, "coupling lambda"),
        "omega_c": Param(float, 1.0, _positive, "mode-density scale"),
        "omega_uc": Param(float, 1.0, _positive, "UV cutoff"),
        "t_min": Param(float, 0.1, _positive, "first time"),
        "t_max": Param(float, 1000.0, _positive, "last time"),
        "n_points": Param(int, 61, _positive, "log-spaced samples"),
        "method": Param(str, "closed", _choice("closed", "quadrature")),
    },
    "ising": {
        "variant": Param(str, "pure", _choice("pure", "frustrated-ohmic", "frustrated-subohmic")),
        "s": Param(float, 1.0, _positive, "spectral exponent"),
        "lam": Param(float, 1.0, _nonneg, "coupling lambda"),
        "omega_uc": Param(float, 1.0, _positive, "UV cutoff"),
        "L": Param(int, 12, lambda v: None if 2 <= v <= ising.MAX_ENUM_SLICES else
                   f"must lie in [2, {ising.MAX_ENUM_SLICES}]", "Trotter slices"),
        "delta_tau": Param(float, 1.0, _positive, "slice width"),
    },
    "rg": {
        "s": Param(float, 0.5, _nonneg, "spectral exponent"),
        "lambda0": Param(float, 0.1, _nonneg, "initial coupling"),
        "ell_max": Param(float, 40.0, _positive, "flow length"),
        "step": Param(float, 0.1, _positive, "output spacing"),
        "s_star": Param(float, rg.S_STAR, lambda v: None if 0 < v < 1 else "must lie in (0, 1)"),
    },
    "rtn": {
        "n_fluctuators": Param(int, 100, _positive),
        "rate_min": Param(float, 1e-3, _positive),
        "rate_max": Param(float, 1.0, _positive),
        "amplitude": Param(float, 1.0, _positive),
        "dt": Param(float, 0.1, _positive),
        "log2_samples": Param(int, 18, lambda v: None if 4 <= v <= 26 else "must lie in [4, 26]"),
        "segments": Param(int, 16, _positive),
    },
    "sweep": {
        "kind": Param(str, "rg", _choice("rg", "edge-scan")),
        "s_min": Param(float, 0.5, _nonneg),
        "s_max": Param(float, 1.5, _nonneg),
        "s_step": Param(float, 0.1, _positive),
        "lambda0": Param(_floats, (0.1, 0.5), None, "comma-separated lambda0 values"),
        "s_star": Param(float, rg.S_STAR, lambda v: None if 0 < v < 1 else "must lie in (0, 1)"),
        "ell_max": Param(float, 40.0, _positive, "flow length per point"),
        "step": Param(float, 0.1, _positive, "output spacing per point"),
        "N_list": Param(_ints, (20, 30, 40, 60), None, "comma-separated chain lengths"),
        "profile": _WIRE["profile"],
        "gamma": Param(float, 0.5, None, "bulk pairing"),
        "t": _WIRE["t"],
        "upsilon": _WIRE["upsilon"],
        "mu": _WIRE["mu"],
        "normal_length": _WIRE["normal_length"],
        "max_points": Param(int, 10000, _positive, "refuse grids larger than this"),
        "workers": Param(int, 1, _positive, "worker threads"),
    },
}


@dataclass
class RunConfig:
    command: str
    parameters: dict
    output_dir: Path
    seed: int = 0
    timestamps: bool = False

    def echo(self) -> dict:
        return {"command": self.command, "seed": self.seed,
                "parameters": {k: (list(v) if isinstance(v, tuple) else v)
                               for k, v in sorted(self.parameters.items())}}


@dataclass
class RunManifest:
    config: RunConfig
    output_files: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    started: str | None = None
    finished: str | None = None

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "tool_version": __version__,
            "config": self.config.echo(),
            "started": self.started,
            "finished": self.finished,
            "output_files": self.output_files,
            "results": self.results,
            "warnings": self.warnings,
            "failures": self.failures,
        }


def _coerce(p: Param, raw, key: str):
    try:
        v = p.kind(raw)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot parse {raw!r} as {getattr(p.kind, '__name__', 'value')}")
    if isinstance(v, float) and not math.isfinite(v):
        raise UsageError(f"{key}: must be finite")
    if p.check is not None:
        msg = p.check(v)
        if msg:
            raise UsageError(f"{key}: {msg} (got {raw})")
    return v


def _read_config(path, command: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (N, L)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"config {path}: {exc}")
    for sec in cp.sections():
        if sec not in SCHEMAS:
            raise UsageError(f"config {path}: unknown section [{sec}]")
    if not cp.has_section(command):
        return {}
    out = {}
    for key, raw in cp.items(command):
        if key not in SCHEMAS[command] and key != "seed":
            raise UsageError(f"config {path}: unknown key '{key}' in [{command}]")
        out[key] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pijunction", description=(
        "Majorana pi-junction chains, qubit dephasing baths, imaginary-time Ising maps and RG flows."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with a [%s] section" % name)
        p.add_argument("--output-dir", help=f"default: ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT}")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--timestamps", action="store_true", help="record wall-clock times in the manifest")
        for key, prm in schema.items():
            p.add_argument(f"--{key}", dest=f"p_{key}", default=None, metavar=key.upper(), help=prm.help or None)
    return parser


def parse_config(argv=None) -> RunConfig:
    """Resolve flags > config file > defaults.  Raises UsageError."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise UsageError("") from None  # argparse already reported it
    cmd = ns.command
    schema = SCHEMAS[cmd]
    raw = {k: p.default for k, p in schema.items()}
    file_vals = _read_config(ns.config, cmd) if ns.config else {}
    seed = 0
    if "seed" in file_vals:
        seed = _coerce(Param(int, 0), file_vals.pop("seed"), "seed")
    raw.update(file_vals)
    for key in schema:
        v = getattr(ns, f"p_{key}")
        if v is not None:
            raw[key] = v
    params = {k: _coerce(schema[k], v, k) for k, v in raw.items()}
    if ns.seed is not None:
        seed = ns.seed
    _validate(cmd, params)
    out = ns.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    return RunConfig(cmd, params, Path(out), seed, ns.timestamps)


def _profile(p) -> wire.JunctionProfile:
    kind = {"uniform": wire.JunctionKind.UNIFORM_KITAEV, "short": wire.JunctionKind.SHORT_JUNCTION,
            "long": wire.JunctionKind.LONG_JUNCTION}[p["profile"]]
    return wire.JunctionProfile(kind, p["gamma"], tunneling=p["t"], upsilon=p["upsilon"],
                                normal_length=p["normal_length"])


def _kernel(p) -> ising.KernelSpec:
    variant = {"pure": ising.KernelVariant.PURE_DEPHASING,
               "frustrated-ohmic": ising.KernelVariant.FRUSTRATED_OHMIC,
               "frustrated-subohmic": ising.KernelVariant.FRUSTRATED_SUB_OHMIC}[p["variant"]]
    return ising.KernelSpec(variant, baths.BathSpec(p["s"], p["lam"], min(1.0, p["omega_uc"]), p["omega_uc"]))


def _s_grid(p) -> list[float]:
    lo, hi, step = p["s_min"], p["s_max"], p["s_step"]
    if hi < lo:
        raise UsageError("s_max: must be >= s_min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps grid points like 1.0 exact so the s = 1 branch is hit
    return [round(lo + i * step, 12) for i in range(n)]


def _validate(cmd: str, p: dict) -> None:
    """Run the owning module's constructors so preconditions fail before any output."""
    try:
        if cmd in ("spectrum", "zero-modes"):
            wire.build_pi_junction(p["N"], _profile(p), p["mu"])
        elif cmd == "dephase":
            if p["t_max"] < p["t_min"]:
                raise UsageError("t_max: must be >= t_min")
            baths.BathSpec(p["s"], p["lam"], p["omega_c"], p["omega_uc"])
        elif cmd == "ising":
            _kernel(p)
        elif cmd == "rtn":
            if p["rate_max"] <= p["rate_min"]:
                raise UsageError("rate_max: must exceed rate_min")
            if (2 ** p["log2_samples"]) % p["segments"]:
                raise UsageError("segments: must divide 2^log2_samples")
        elif cmd == "sweep":
            if p["kind"] == "rg":
                grid = _s_grid(p)
                if not grid or not p["lambda0"]:
                    raise UsageError("sweep grid is empty")
                if any(v < 0 for v in p["lambda0"]):
                    raise UsageError("lambda0: must be >= 0")
                npts = len(grid) * len(p["lambda0"])
            else:
                if not p["N_list"]:
                    raise UsageError("sweep grid is empty")
                for n in p["N_list"]:
                    wire.build_pi_junction(n, _profile(p), p["mu"])
                npts = len(p["N_list"])
            if npts > p["max_points"]:
                raise UsageError(f"max_points: grid has {npts} points, limit {p['max_points']}")
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---- output helpers --------------------------------------------------------

class _Writer:
    def __init__(self, root: Path):
        self.root = root
        self.files: list[dict] = []

    def text(self, name: str, content: str) -> None:
        data = content.encode("utf-8")
        path = self.root / name
        path.write_bytes(data)
        self.files.append({"path": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else repr(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _num(x):
    return float(x) if isinstance(x, (np.floating, float)) else x


# ---- commands --------------------------------------------------------------

def _run_spectrum(cfg, out, man):
    p = cfg.parameters
    params = wire.build_pi_junction(p["N"], _profile(p), p["mu"])
    ms = modes.solve_modes(wire.assemble_m(params))
    out.text("wire.txt", params.to_text())
    out.text("spectrum.csv", _csv(["index", "Lambda"], [(i, float(v)) for i, v in enumerate(ms.lambdas)]))
    man.results["zero_energy_count"] = ms.count_zero_energy()
    man.results["lowest_nonzero_Lambda"] = _num(ms.lambdas[ms.lambdas >= ms.zero_tol][0]) \
        if np.any(ms.lambdas >= ms.zero_tol) else None


def _run_zero_modes(cfg, out, man):
    p = cfg.parameters
    params = wire.build_pi_junction(p["N"], _profile(p), p["mu"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        found = modes.zero_modes_by_recursion(params)
    man.warnings += [str(w.message) for w in caught]
    ms = modes.solve_modes(wire.assemble_m(params))
    header = ["site"] + [f"mode_{k}" for k in range(len(found))]
    rows = [(int(n),) + tuple(float(z.profile[i]) for z in found) for i, n in enumerate(params.sites)]
    out.text("zero_modes.csv", _csv(header, rows))
    out.text("zero_mode_summary.csv", _csv(
        ["mode", "sector", "symmetry", "residual"],
        [(f"mode_{k}", z.sector.value, z.symmetry.value, z.energy_residual) for k, z in enumerate(found)]))
    man.results["zero_energy_count"] = ms.count_zero_energy()
    man.results["modes_found"] = len(found)


def _run_dephase(cfg, out, man):
    p = cfg.parameters
    spec = baths.BathSpec(p["s"], p["lam"], p["omega_c"], p["omega_uc"])
    times = np.geomspace(p["t_min"], p["t_max"], p["n_points"]) if p["n_points"] > 1 else np.array([p["t_min"]])
    method = dephasing.Method.CLOSED_FORM if p["method"] == "closed" else dephasing.Method.QUADRATURE
    curve = dephasing.decoherence_curve(spec, times, method)
    out.text("decoherence.csv", curve.to_csv())
    man.results["regime"] = spec.regime.value


def _run_ising(cfg, out, man):
    p = cfg.parameters
    k = _kernel(p)
    inst = ising.build_instance(k, p["L"], p["delta_tau"])
    res = ising.enumerate_partition(inst)
    out.text("couplings.csv", inst.to_csv())
    out.text("correlations.csv", res.to_csv())
    man.results["diagnostic"] = ising.ferro_para_diagnostic(k).value
    man.results["decay_exponent"] = ising.decay_exponent(k) if math.isfinite(ising.decay_exponent(k)) else "inf"
    man.results["log_z_ratio"] = res.log_z_ratio


def _run_rg(cfg, out, man):
    p = cfg.parameters
    tr = rg.integrate_flow(p["lambda0"], p["s"], p["ell_max"], p["step"])
    out.text("trajectory.csv", tr.to_csv())
    ph = rg.classify_phase(p["s"], p["lambda0"], p["s_star"])
    man.results.update({
        "phase": ph.label.value, "entropy_class": ph.entropy_class.value, "free": ph.free,
        "strong_coupling": ph.strong_coupling, "s_star": ph.s_star,
        "s_star_uncertainty": ph.s_star_uncertainty, "terminal_lambda": tr.terminal,
        "fixed_points": [[lam, st.value] for lam, st in rg.fixed_points(p["s"])],
    })
    if ph.strong_coupling:
        man.warnings.append("lambda0 exceeds the perturbative fixed point sqrt(1-s); label is extrapolated")


def _run_rtn(cfg, out, man):
    p = cfg.parameters
    ens = baths.RTNEnsemble.log_uniform(p["n_fluctuators"], p["rate_min"], p["rate_max"], cfg.seed, p["amplitude"])
    n = 2 ** p["log2_samples"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        x = baths.simulate_rtn(ens, (n - 1) * p["dt"], p["dt"])
    man.warnings += [str(w.message) for w in caught]
    w, pw = baths.psd_estimate(x, p["dt"], p["segments"])
    out.text("ensemble.txt", ens.to_text())
    out.text("psd.csv", _csv(["omega", "psd", "model"], zip(w[1:].tolist(), pw[1:].tolist(), ens.psd(w[1:]).tolist())))
    lo, hi = 2 * p["rate_min"], 2 * p["rate_max"]
    # central two decades of the 1/f window [2 rate_min, 2 rate_max]
    mid = math.sqrt(lo * hi)
    width = min(10.0, math.sqrt(hi / lo))
    try:
        man.results["psd_slope"] = baths.log_binned_slope(w, pw, mid / width, mid * width)
        man.results["fit_window"] = [mid / width, mid * width]
    except ValueError as exc:
        man.warnings.append(f"slope fit skipped: {exc}")


PLOT_TEMPLATE = '''"""Phase diagram plot for phase_diagram.csv (edit freely)."""
import csv
import sys

import matplotlib.pyplot as plt

COLORS = {"SuperOhmicPerturbative": "tab:blue", "OhmicFrustrated": "tab:green",
          "CriticalIntermediate": "tab:orange", "Localized": "tab:red"}

path = sys.argv[1] if len(sys.argv) > 1 else "phase_diagram.csv"
with open(path, newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if r["status"] == "ok"]
for label, color in COLORS.items():
    pts = [(float(r["s"]), float(r["lambda0"])) for r in rows if r["label"] == label]
    if pts:
        plt.scatter(*zip(*pts), c=color, label=label)
plt.axvline(float(rows[0]["s_star"]) if rows else 0.76, ls="--", c="k", lw=0.8)
plt.xlabel("s")
plt.ylabel("lambda0")
plt.legend()
plt.savefig("phase_diagram.png", dpi=150)
'''


def _rg_point(s, lam0, p):
    ph = rg.classify_phase(s, lam0, p["s_star"])
    tr = rg.integrate_flow(lam0, s, p["ell_max"], p["step"])
    return ph, tr.terminal


def _run_sweep(cfg, out, man):
    p = cfg.parameters
    if p["kind"] == "rg":
        points = [(s, lam0) for s in _s_grid(p) for lam0 in p["lambda0"]]
        results = _pool_map(lambda pt: _rg_point(pt[0], pt[1], p), points, p["workers"])
        rows = []
        for (s, lam0), (ok, val) in zip(points, results):
            if ok:
                ph, term = val
                rows.append((s, lam0, ph.label.value, ph.entropy_class.value, term, ph.s_star, "ok", ""))
            else:
                rows.append((s, lam0, "", "", "", p["s_star"], "failed", val))
                man.failures.append({"s": s, "lambda0": lam0, "error": val})
        out.text("phase_diagram.csv", _csv(
            ["s", "lambda0", "label", "entropy_class", "terminal_lambda", "s_star", "status", "error"], rows))
        out.text("plot_phase_diagram.py", PLOT_TEMPLATE)
        man.results["points"] = len(points)
    else:
        prof = _profile(p)
        ns = sorted(p["N_list"])
        results = _pool_map(lambda n: modes.edge_splitting(wire.build_pi_junction(n, prof, p["mu"])),
                            ns, p["workers"])
        rows, scan = [], []
        for n, (ok, val) in zip(ns, results):
            if ok:
                rows.append((n, val, "ok", ""))
                scan.append((n, val))
            else:
                rows.append((n, "", "failed", val))
                man.failures.append({"N": n, "error": val})
        out.text("edge_scan.csv", _csv(["N", "splitting", "status", "error"], rows))
        man.results["points"] = len(ns)
        man.results["fitted_log_slope"] = modes.fit_splitting_decay(scan)


def _pool_map(fn, items, workers):
    def guarded(x):
        try:
            return True, fn(x)
        except Exception as exc:  # per-point failures are recorded, not fatal
            return False, f"{type(exc).__name__}: {exc}"
    if workers <= 1:
        return [guarded(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, items))  # map keeps grid order


RUNNERS = {
    "spectrum": (_run_spectrum, "wire_builder/mode_solver"),
    "zero-modes": (_run_zero_modes, "mode_solver"),
    "dephase": (_run_dephase, "dephasing_dynamics"),
    "ising": (_run_ising, "ising_map"),
    "rg": (_run_rg, "rg_flow"),
    "rtn": (_run_rtn, "bath_models"),
    "sweep": (_run_sweep, "sweep"),
}


class ExecutionError(RuntimeError):
    pass


def _now(enabled: bool):
    return _dt.datetime.now(_dt.timezone.utc).isoformat() if enabled else None


def execute(cfg: RunConfig) -> RunManifest:
    """Run one command, write its files and the manifest.  Raises ExecutionError."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg, started=_now(cfg.timestamps))
    out = _Writer(cfg.output_dir)
    fn, module = RUNNERS[cfg.command]
    try:
        fn(cfg, out, man)
    except Exception as exc:
        ctx = ", ".join(f"{k}={v}" for k, v in sorted(cfg.parameters.items()))
        raise ExecutionError(f"[{module}] {type(exc).__name__}: {exc} ({ctx})") from exc
    man.output_files = out.files
    man.finished = _now(cfg.timestamps)
    with open(cfg.output_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(man.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return man


def verify_manifest(directory) -> list[str]:
    """Files whose digest no longer matches the manifest (empty list = intact)."""
    root = Path(directory)
    data = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for entry in data["output_files"]:
        f = root / entry["path"]
        if not f.exists() or hashlib.sha256(f.read_bytes()).hexdigest() != entry["sha256"]:
            bad.append(entry["path"])
    return bad


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        if str(exc):
            print(f"pijunction: error: {exc}", file=sys.stderr)
        return 2
    try:
        man = execute(cfg)
    except ExecutionError as exc:
        print(f"pijunction: {exc}", file=sys.stderr)
        return 1
    for f in man.output_files:
        print(cfg.output_dir / f["path"])
    print(cfg.output_dir / "manifest.json")
    if man.failures:
        print(f"pijunction: {len(man.failures)} sweep point(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
