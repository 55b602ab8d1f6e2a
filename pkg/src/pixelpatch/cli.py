"""Command-line workflows: simulate, optimize, baseline, export-mask, report.

Runs are archival: every command resolves its configuration (file values
over documented defaults), echoes the result to ``config.resolved.txt`` in
the output directory, and writes deterministic artifacts, so a run
directory plus the package version reproduces every file bit for bit.

Config file format: line-oriented sections in square brackets with
``key = value`` pairs; ``#`` or ``;`` start comments. Unknown sections or
keys are errors. See ``DEFAULTS`` for every key and its default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, bench
from .emcore import GaussianDerivativePulse, MaterialStack, run_fdtd
from .emcore.solver import NumericalInstabilityError
from .evaluator import FdtdPairEvaluator
from .grid import PixelGrid, make_grid, pack_bits_hex, read_mask, repair_floating, write_mask
from .optim import AntennaEvaluator, CostSpec, Swarm, SwarmConfig, run as optim_run
from .sparam import extract_sparams, resonance_min, sanity_check, touchstone_write

__all__ = ["main", "parse_config", "render_config", "RunConfig", "ConfigError"]

HISTORY_HEADER = "iter,gbest_cost,s11_db,s21_db,cache_hit_rate,bits_hex"
LOCK_NAME = "run.lock"

# section -> key -> (type, default). 'bool' accepts true/false/1/0/yes/no.
DEFAULTS = {
    "grid": {
        "nx": (int, 8),
        "ny": (int, 8),
        "pitch": (float, 2.29e-3),
        "feed_ix": (int, -1),   # -1: bottom-center column nx // 2
        "feed_iy": (int, 0),
    },
    "materials": {
        "eps_r": (float, 2.2),
        "h": (float, 0.787e-3),
        "loss_tangent": (float, 0.0),
    },
    "cost": {
        "f0": (float, 5.4e9),
        "t_match_db": (float, -10.0),
        "t_iso_db": (float, -40.0),
        "alpha": (float, 1.0),
        "beta": (float, 1.0),
    },
    "swarm": {
        "n_particles": (int, 30),
        "n_iters": (int, 200),
        "w_start": (float, 0.9),
        "w_end": (float, 0.4),
        "c1": (float, 2.0),
        "c2": (float, 2.0),
        "v_max": (float, 6.0),
        "transfer": (str, "s-shaped"),
        "seed": (int, 0),
        "asymmetric": (bool, False),
    },
    "solver": {
        "spacing": (float, 5e-3),
        "resolution": (int, 2),
        "nsub": (int, 3),
        "band_min": (float, 3e9),
        "band_max": (float, 8e9),
        "nfreq": (int, 251),
        "max_steps": (int, 20000),
        "baseline_nx": (int, 15),
    },
    "output": {
        "dir": (str, "out"),
        "checkpoint_interval": (int, 10),
    },
}


class ConfigError(ValueError):
    """Bad run configuration; names the section/key and, when known, the
    config file line."""

    def __init__(self, message: str, section: str = "", key: str = "", line: int = 0):
        loc = []
        if section:
            loc.append(f"section [{section}]")
        if key:
            loc.append(f"key {key!r}")
        if line:
            loc.append(f"line {line}")
        prefix = ", ".join(loc)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.section, self.key, self.line = section, key, line


def _coerce(raw: str, typ, section: str, key: str, line: int):
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(f"not an integer: {raw!r}")
            return int(val)
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(str(exc), section, key, line) from None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one workflow run."""

    values: dict        # section -> key -> value
    source_lines: dict  # (section, key) -> config file line (0 = default)

    def __getitem__(self, section_key: tuple[str, str]):
        return self.values[section_key[0]][section_key[1]]

    # -- assembled domain objects ----------------------------------------

    def materials(self) -> MaterialStack:
        m = self.values["materials"]
        return MaterialStack(m["eps_r"], m["h"], m["loss_tangent"])

    def costspec(self) -> CostSpec:
        c = self.values["cost"]
        s = self.values["solver"]
        return CostSpec(c["f0"], c["t_match_db"], c["t_iso_db"], c["alpha"],
                        c["beta"], (s["band_min"], s["band_max"]))

    def swarm_config(self, seed_override: int | None = None) -> SwarmConfig:
        w = self.values["swarm"]
        return SwarmConfig(w["n_particles"], w["n_iters"], w["w_start"], w["w_end"],
                           w["c1"], w["c2"], w["v_max"], w["transfer"],
                           w["seed"] if seed_override is None else seed_override)

    def grid_shape(self) -> tuple[int, int, float, tuple[int, int]]:
        g = self.values["grid"]
        fx = g["nx"] // 2 if g["feed_ix"] < 0 else g["feed_ix"]
        return g["nx"], g["ny"], g["pitch"], (fx, g["feed_iy"])

    def pair_evaluator(self, **overrides) -> FdtdPairEvaluator:
        s = self.values["solver"]
        kw = dict(
            materials=self.materials(),
            spacing=s["spacing"],
            resolution=s["resolution"],
            band=(s["band_min"], s["band_max"]),
            nfreq=s["nfreq"],
            max_steps=s["max_steps"],
            scene_kwargs={"nsub": s["nsub"]},
        )
        kw.update(overrides)
        return FdtdPairEvaluator(**kw)

    def validate(self) -> None:
        def bad(msg, section, key):
            raise ConfigError(msg, section, key, self.source_lines.get((section, key), 0))

        g = self.values["grid"]
        if g["nx"] < 1 or g["ny"] < 1:
            bad("grid dimensions must be >= 1", "grid", "nx")
        if g["pitch"] <= 0:
            bad("pitch must be > 0", "grid", "pitch")
        if g["feed_ix"] >= g["nx"]:
            bad(f"feed_ix must be in [0, {g['nx']}) or -1 for auto", "grid", "feed_ix")
        if not (0 <= g["feed_iy"] < g["ny"]):
            bad(f"feed_iy must be in [0, {g['ny']})", "grid", "feed_iy")
        try:
            self.materials()
        except ValueError as exc:
            bad(str(exc), "materials", "eps_r")
        try:
            self.costspec()
        except ValueError as exc:
            bad(str(exc), "cost", "f0")
        try:
            self.swarm_config()
        except ValueError as exc:
            bad(str(exc), "swarm", "n_particles")
        s = self.values["solver"]
        if s["spacing"] < 0:
            bad("spacing must be >= 0", "solver", "spacing")
        if s["resolution"] < 2:
            bad("resolution must be >= 2 cells per pixel", "solver", "resolution")
        if s["nsub"] < 3:
            bad("nsub must be >= 3 substrate cells", "solver", "nsub")
        if not 0 < s["band_min"] < s["band_max"]:
            bad("need 0 < band_min < band_max", "solver", "band_min")
        if s["nfreq"] < 2:
            bad("nfreq must be >= 2", "solver", "nfreq")
        if s["max_steps"] < 1:
            bad("max_steps must be >= 1", "solver", "max_steps")
        if s["baseline_nx"] < 1:
            bad("baseline_nx must be >= 1", "solver", "baseline_nx")
        if self.values["output"]["checkpoint_interval"] < 1:
            bad("checkpoint_interval must be >= 1", "output", "checkpoint_interval")


def parse_config_text(text: str, path: str = "<config>") -> RunConfig:
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in DEFAULTS.items()}
    source = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", line=line_no)
            section = stripped[1:-1].strip()
            if section not in DEFAULTS:
                raise ConfigError(f"unknown section [{section}]", line=line_no)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=line_no)
        if section is None:
            raise ConfigError("key/value before any [section]", line=line_no)
        key, _, raw_val = stripped.partition("=")
        key = key.strip()
        raw_val = raw_val.split("#", 1)[0].split(";", 1)[0].strip()
        if key not in DEFAULTS[section]:
            raise ConfigError(f"unknown key {key!r}", section, key, line_no)
        if not raw_val:
            raise ConfigError("empty value", section, key, line_no)
        typ = DEFAULTS[section][key][0]
        values[section][key] = _coerce(raw_val, typ, section, key, line_no)
        source[(section, key)] = line_no
    cfg = RunConfig(values, source)
    cfg.validate()
    return cfg


def parse_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), str(path))


def render_config(cfg: RunConfig, seed_override: int | None = None) -> str:
    """Echo text of the fully resolved configuration (provenance record)."""
    lines = [f"# pixelpatch {__version__} resolved configuration"]
    for section, keys in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key in keys:
            val = cfg.values[section][key]
            if section == "swarm" and key == "seed" and seed_override is not None:
                val = seed_override
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# run directory helpers
# ---------------------------------------------------------------------------

class _RunDir:
    """Output directory with an exclusive lock for the run's duration."""

    def __init__(self, path: str):
        self.path = path
        self.lock_path = os.path.join(path, LOCK_NAME)

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(
                f"{self.lock_path} exists: another run targets this directory "
                "(remove the lock if that run is dead)") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"pid {os.getpid()}\n")
        return self

    def __exit__(self, *exc):
        try:
            os.remove(self.lock_path)
        except FileNotFoundError:
            pass
        return False

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def write_text(self, name: str, text: str) -> str:
        tmp = self.file(name + ".tmp")
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, self.file(name))
        return self.file(name)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _history_csv(history, nx: int, ny: int, pitch: float, feed) -> str:
    rows = [HISTORY_HEADER]
    for h in history:
        rows.append(",".join((
            str(h.iteration),
            _fmt(h.gbest_cost),
            _fmt(h.s11_db),
            _fmt(h.s21_db),
            _fmt(h.cache_hit_rate),
            _key_to_hex(h.gbest_key, nx, ny, pitch, feed),
        )))
    return "\n".join(rows) + "\n"


def _key_to_hex(key: str, nx: int, ny: int, pitch: float, feed) -> str:
    if not key:
        return ""
    parts = key.split(":")
    return ":".join(
        pack_bits_hex(PixelGrid(nx, ny, np.frombuffer(p.encode(), dtype=np.uint8) - ord("0"),
                                pitch, feed))
        for p in parts)


def _simulate_pair(cfg: RunConfig, grid_a: PixelGrid, grid_b: PixelGrid):
    """Both-port excitation of a pair; returns (sset, scene)."""
    ev = cfg.pair_evaluator(both_ports=True)
    scene = ev.build(grid_a, grid_b)
    pulse = GaussianDerivativePulse()
    runs = [run_fdtd(scene, 1, ev.max_steps, pulse), run_fdtd(scene, 2, ev.max_steps, pulse)]
    return extract_sparams(runs, ev.band, ev.nfreq), scene


def _pair_report(cfg: RunConfig, sset, lossless: bool) -> list[str]:
    f0 = cfg["cost", "f0"]
    fr, dip = resonance_min(sset, 1)
    rep = sanity_check(sset, lossless=lossless)
    return [
        f"s11_db_f0 {_fmt(sset.s11_db_at(f0))}",
        f"s21_db_f0 {_fmt(sset.s21_db_at(f0))}",
        f"resonance_hz {_fmt(fr)}",
        f"resonance_dip_db {_fmt(dip)}",
        f"sanity_passivity_max {_fmt(rep.max_passivity)} "
        f"{'ok' if rep.passivity_ok else 'VIOLATION'}",
        f"sanity_reciprocity_max {_fmt(rep.max_reciprocity_err)} "
        f"{'ok' if rep.reciprocity_ok else 'VIOLATION'}",
    ]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, mask_path: str, out_dir: str) -> int:
    nx, ny, pitch, feed = cfg.grid_shape()
    grid = read_mask(mask_path, pitch)
    if (grid.nx, grid.ny) != (nx, ny):
        raise ConfigError(f"mask is {grid.nx}x{grid.ny}, config grid is {nx}x{ny}",
                          "grid", "nx")
    grid = repair_floating(PixelGrid(nx, ny, grid.bits, pitch, feed))
    with _RunDir(out_dir) as rd:
        rd.write_text("config.resolved.txt", render_config(cfg))
        sset, scene = _simulate_pair(cfg, grid, grid)
        touchstone_write(sset, rd.file("sim.s2p"))
        write_mask(grid, rd.file("mask_repaired.p1"))
        rd.write_text("scene_audit.txt", scene.audit_text())
        lossless = cfg["materials", "loss_tangent"] == 0.0
        lines = [f"pixelpatch {__version__} simulate report",
                 f"mask {os.path.basename(mask_path)}"] + _pair_report(cfg, sset, lossless)
        rd.write_text("report.txt", "\n".join(lines) + "\n")
        print("\n".join(lines))
    return 0


def cmd_baseline(cfg: RunConfig, out_dir: str) -> int:
    stack = cfg.materials()
    f0 = cfg["cost", "f0"]
    dims = bench.design_standard_patch(f0, stack.eps_r, stack.h)
    nx = cfg["solver", "baseline_nx"]
    pitch = dims.W / nx
    ny = max(1, round(dims.L / pitch))
    dx = pitch / cfg["solver", "resolution"]
    dz = stack.h / cfg["solver", "nsub"]
    band = (cfg["solver", "band_min"], cfg["solver", "band_max"])

    dims_lines = [
        f"pixelpatch {__version__} baseline dims",
        f"f0_hz {_fmt(f0)}",
        f"W_m {dims.W!r}",
        f"L_m {dims.L!r}",
        f"delta_L_m {dims.delta_L!r}",
        f"eps_eff {dims.eps_eff!r}",
        f"grid {nx}x{ny} pitch_m {pitch!r}",
        f"hammerstad_rasterized_hz "
        f"{_fmt(bench.hammerstad_resonance(nx * pitch, ny * pitch, stack.eps_r, stack.h))}",
    ]

    refusal = None
    if not band[0] <= f0 <= band[1]:
        refusal = (f"f0 {_fmt(f0)} Hz is outside the solver band "
                   f"[{_fmt(band[0])}, {_fmt(band[1])}] Hz; a desk-scale lattice "
                   "cannot resolve this design, writing dims only")
    elif dx / dz > 8:
        refusal = (f"cell aspect dx/dz = {dx / dz:.1f} exceeds 8; the lattice "
                   "would be badly under-resolved vertically, writing dims only")

    with _RunDir(out_dir) as rd:
        rd.write_text("config.resolved.txt", render_config(cfg))
        if refusal is not None:
            dims_lines.append(f"simulation_refused {refusal}")
            rd.write_text("dims.txt", "\n".join(dims_lines) + "\n")
            print("\n".join(dims_lines), file=sys.stderr)
            raise SystemExit(f"baseline simulation refused: {refusal}")
        grid = make_grid(nx, ny, 1, pitch=pitch)
        sset, scene = _simulate_pair(cfg, grid, grid)
        touchstone_write(sset, rd.file("baseline.s2p"))
        rd.write_text("scene_audit.txt", scene.audit_text())
        lossless = cfg["materials", "loss_tangent"] == 0.0
        dims_lines += _pair_report(cfg, sset, lossless)
        rd.write_text("dims.txt", "\n".join(dims_lines) + "\n")
        print("\n".join(dims_lines))
    return 0


def cmd_optimize(cfg: RunConfig, out_dir: str, seed_override: int | None = None,
                 resume_path: str | None = None) -> int:
    nx, ny, pitch, feed = cfg.grid_shape()
    costspec = cfg.costspec()
    pair = cfg.pair_evaluator()
    evaluator = AntennaEvaluator(nx, ny, pitch, feed, costspec, pair,
                                 asymmetric=cfg["swarm", "asymmetric"])
    swarm_cfg = cfg.swarm_config(seed_override)

    with _RunDir(out_dir) as rd:
        rd.write_text("config.resolved.txt", render_config(cfg, seed_override))

        if resume_path is not None:
            with open(resume_path) as fh:
                state = json.load(fh)
            try:
                swarm = Swarm.from_state(state, evaluator, config=swarm_cfg)
            except ValueError as exc:
                raise ConfigError(str(exc), "swarm", "seed") from None
        else:
            swarm = Swarm(swarm_cfg, evaluator)

        def checkpoint(sw: Swarm) -> None:
            rd.write_text("checkpoint.json", json.dumps(sw.state_dict()))
            rd.write_text("history.csv", _history_csv(sw.history, nx, ny, pitch, feed))

        try:
            result = optim_run(swarm_cfg, evaluator,
                               checkpoint_every=cfg["output", "checkpoint_interval"],
                               checkpoint_fn=checkpoint, swarm=swarm)
        except NumericalInstabilityError as exc:
            checkpoint(swarm)
            rd.write_text("ABORTED.txt", f"solver instability: {exc}\n")
            raise SystemExit(f"run aborted (checkpoint preserved): {exc}")

        checkpoint(swarm)
        rd.write_text("history.csv", _history_csv(result.history, nx, ny, pitch, feed))
        best_a, best_b = evaluator.grids_from_key(result.best_key)
        write_mask(best_a, rd.file("mask_best.p1"))
        if best_b != best_a:
            write_mask(best_b, rd.file("mask_best_b.p1"))

        best_sset, _ = _simulate_pair(cfg, best_a, best_b)
        touchstone_write(best_sset, rd.file("best.s2p"))

        baseline_grid = make_grid(nx, ny, 1, pitch=pitch, feed=feed)
        base_sset, _ = _simulate_pair(cfg, baseline_grid, baseline_grid)
        touchstone_write(base_sset, rd.file("baseline.s2p"))

        f0 = costspec.f0
        improvement = bench.isolation_improvement(base_sset, best_sset, f0)
        lossless = cfg["materials", "loss_tangent"] == 0.0
        lines = [
            f"pixelpatch {__version__} optimize report",
            f"seed {swarm_cfg.seed}",
            f"iterations {len(result.history)}",
            f"evaluations {result.evaluations}",
            f"cache_hit_rate {_fmt(result.cache_hit_rate)}",
            f"best_cost {_fmt(result.best_cost)}",
            f"best_bits_hex {_key_to_hex(result.best_key, nx, ny, pitch, feed)}",
        ] + _pair_report(cfg, best_sset, lossless) + [
            f"baseline_s11_db_f0 {_fmt(base_sset.s11_db_at(f0))}",
            f"baseline_s21_db_f0 {_fmt(base_sset.s21_db_at(f0))}",
            f"isolation_improvement_db {_fmt(improvement)}",
        ]
        rd.write_text("report.txt", "\n".join(lines) + "\n")
        print("\n".join(lines))
    return 0


def cmd_export_mask(cfg: RunConfig, path: str, pattern: str, density: float,
                    seed: int) -> int:
    nx, ny, pitch, feed = cfg.grid_shape()
    if pattern == "ones":
        grid = make_grid(nx, ny, 1, pitch=pitch, feed=feed)
    elif pattern == "zeros":
        grid = make_grid(nx, ny, 0, pitch=pitch, feed=feed)
    elif pattern == "random":
        from .grid import random_grid
        grid = repair_floating(random_grid(nx, ny, density, seed, pitch=pitch, feed=feed))
    else:
        raise ConfigError(f"unknown mask pattern {pattern!r}")
    write_mask(grid, path)
    print(f"wrote {grid.nx}x{grid.ny} mask ({grid.active_count()} active) to {path}")
    return 0


def cmd_report(out_dir: str) -> int:
    found = False
    for name in ("report.txt", "dims.txt"):
        p = os.path.join(out_dir, name)
        if os.path.exists(p):
            found = True
            with open(p) as fh:
                sys.stdout.write(fh.read())
    hist = os.path.join(out_dir, "history.csv")
    if os.path.exists(hist):
        found = True
        with open(hist) as fh:
            rows = fh.read().strip().splitlines()
        print(f"history rows {len(rows) - 1}")
        if len(rows) > 1:
            print(f"history first {rows[1]}")
            print(f"history last  {rows[-1]}")
    if not found:
        raise SystemExit(f"no run artifacts found in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pixelpatch",
        description="Pixelated patch antenna pair synthesis workflows.")
    ap.add_argument("--version", action="version", version=f"pixelpatch {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (defaults apply if omitted)")
    common.add_argument("--out", help="output directory (overrides [output] dir)")

    p = sub.add_parser("simulate", parents=[common],
                       help="evaluate one mask as a symmetric pair")
    p.add_argument("--mask", required=True, help="P1 mask file for the element")

    p = sub.add_parser("optimize", parents=[common], help="run the swarm search")
    p.add_argument("--seed", type=int, help="override [swarm] seed")
    p.add_argument("--resume", help="checkpoint.json to continue from")

    sub.add_parser("baseline", parents=[common],
                   help="synthesize and simulate the standard-patch pair")

    p = sub.add_parser("export-mask", parents=[common], help="write a template mask")
    p.add_argument("--mask-out", required=True, help="destination mask path")
    p.add_argument("--pattern", default="ones", choices=("ones", "zeros", "random"))
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="print the artifacts of a finished run")
    p.add_argument("--out", required=True, help="run directory to summarize")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "report":
        return cmd_report(args.out)

    cfg = parse_config(args.config) if args.config else parse_config_text("")
    out_dir = args.out or cfg["output", "dir"]
    if args.command == "simulate":
        return cmd_simulate(cfg, args.mask, out_dir)
    if args.command == "optimize":
        return cmd_optimize(cfg, out_dir, args.seed, args.resume)
    if args.command == "baseline":
        return cmd_baseline(cfg, out_dir)
    if args.command == "export-mask":
        return cmd_export_mask(cfg, args.mask_out, args.pattern, args.density, args.seed)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
