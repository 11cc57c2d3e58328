"""Command-line interface: synthetic case generation, registration, benchmarks.

Commands
--------
synth     generate wavy-deformation cases (images + ground-truth meshes + manifest)
register  estimate the deformation between one template/target pair
bench     run a case manifest through algorithms and seeds, emit a metrics CSV
eval      score an existing mesh JSON against a template/target pair

A TOML config file can preset any option; command-line flags override it.
Runs are reproducible from (config, seed): artifacts are byte-identical
except wall-clock timing, which stays in the run log unless --with-timing.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .bench import generate_wavy_mesh, mede, procedural_texture, rmse, synthesize_case
from .coarse2fine import ALGORITHMS, plan_levels, run_coarse_to_fine
from .decision import RegistrationResult
from .evolution import genes_to_mesh
from .ffd import (
    ControlMesh,
    LatticeConfig,
    frame_offset,
    load_mesh,
    save_mesh,
    warp_backward,
    warp_forward_points,
)
from .image import GrayImage, build_pyramid, read_image, write_png, write_png_rgb

log = logging.getLogger("ffdreg")

CSV_COLUMNS = [
    "image", "kind", "lattice", "range", "algo", "groups",
    "seed", "solution", "rmse", "mede", "wall_ms",
]

EXIT_BAD_CONFIG = 1
EXIT_BAD_INPUT = 2


class ConfigError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    algo: str = "nsga2"
    groups: int = 2
    lattice: tuple[int, int] = (7, 7)
    range_limit: float = 5.0
    levels: int = 3
    budget: int = 10000
    budget_scope: str = "level"
    stride: int = 5
    pop: int = 100
    sbx_prob: float = 1.0
    sbx_eta: float = 15.0
    mut_prob: float | None = None
    mut_eta: float = 20.0
    ref_divisions: int | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    dump_levels: bool = False
    with_timing: bool = False
    force: bool = False

    def validate(self) -> None:
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.groups not in (1, 2, 4):
            raise ConfigError("groups must be 1, 2, or 4")
        if self.algo == "ga" and self.groups != 1:
            raise ConfigError("ga requires groups = 1")
        if self.algo != "ga" and self.groups < 2:
            raise ConfigError(f"{self.algo} requires groups >= 2")
        if self.lattice[0] < 4 or self.lattice[1] < 4:
            raise ConfigError("lattice needs at least 4x4 control points")
        if self.range_limit <= 0:
            raise ConfigError("range must be positive")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.budget < self.pop:
            raise ConfigError("budget must cover at least one population")
        if self.budget_scope not in ("level", "total"):
            raise ConfigError("budget_scope must be 'level' or 'total'")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.pop < 2:
            raise ConfigError("population size must be >= 2")
        if not self.seeds:
            raise ConfigError("at least one seed required")

    def level_budgets(self) -> list[int]:
        if self.budget_scope == "level":
            return [self.budget] * self.levels
        per = self.budget // self.levels
        budgets = [per] * self.levels
        budgets[-1] += self.budget - per * self.levels
        return budgets


# ---------------------------------------------------------------------------
# Config file and argument plumbing
# ---------------------------------------------------------------------------

def _parse_lattice(text: str) -> tuple[int, int]:
    parts = text.lower().replace("x", ",").split(",")
    if len(parts) == 1:
        parts = parts * 2
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad lattice spec {text!r}") from exc
    return nx, ny


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise ConfigError(f"bad seed list {text!r}") from exc


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    doc = {}
    if getattr(args, "config", None):
        doc = load_config_file(args.config)
        known = {
            "algo": str, "groups": int, "lattice": None, "range": None,
            "levels": int, "budget": int, "budget_scope": str, "stride": int,
            "pop": int, "sbx_prob": float, "sbx_eta": float, "mut_prob": float,
            "mut_eta": float, "ref_divisions": int, "seeds": None,
            "dump_levels": bool, "with_timing": bool,
        }
        for key, value in doc.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "lattice":
                value = _parse_lattice(value) if isinstance(value, str) else tuple(value)
                cfg = replace(cfg, lattice=value)
            elif key == "range":
                cfg = replace(cfg, range_limit=float(value))
            elif key == "seeds":
                value = _parse_seeds(value) if isinstance(value, str) else [int(v) for v in value]
                cfg = replace(cfg, seeds=value)
            else:
                cfg = replace(cfg, **{key: known[key](value)})
    explicit_groups = "groups" in doc
    overrides = {}
    if getattr(args, "algo", None) is not None:
        overrides["algo"] = args.algo
    if getattr(args, "groups", None) is not None:
        overrides["groups"] = args.groups
        explicit_groups = True
    if getattr(args, "lattice", None) is not None:
        overrides["lattice"] = _parse_lattice(args.lattice)
    if getattr(args, "range", None) is not None:
        overrides["range_limit"] = args.range
    if getattr(args, "levels", None) is not None:
        overrides["levels"] = args.levels
    if getattr(args, "budget", None) is not None:
        overrides["budget"] = args.budget
    if getattr(args, "budget_scope", None) is not None:
        overrides["budget_scope"] = args.budget_scope
    if getattr(args, "stride", None) is not None:
        overrides["stride"] = args.stride
    if getattr(args, "pop", None) is not None:
        overrides["pop"] = args.pop
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = _parse_seeds(args.seed)
    if getattr(args, "ref_divisions", None) is not None:
        overrides["ref_divisions"] = args.ref_divisions
    if getattr(args, "dump_levels", False):
        overrides["dump_levels"] = True
    if getattr(args, "with_timing", False):
        overrides["with_timing"] = True
    if getattr(args, "force", False):
        overrides["force"] = True
    cfg = replace(cfg, **overrides)
    if cfg.algo == "ga" and not explicit_groups:
        cfg = replace(cfg, groups=1)
    cfg.validate()
    return cfg


def _setup_logging(out_dir: Path) -> None:
    log.setLevel(logging.INFO)
    log.handlers.clear()
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(console)
    # Timestamps live only in the log file so other artifacts stay reproducible.
    filehandler = logging.FileHandler(out_dir / "run.log")
    filehandler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(filehandler)


def _prepare_out_dir(out: str | Path, force: bool) -> Path:
    out_dir = Path(out)
    if not force and out_dir.exists() and any(out_dir.iterdir()):
        raise ConfigError(f"output directory {out_dir} is not empty; pass --force")
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in CSV_COLUMNS})


def _aggregate_rows(per_seed: list[dict]) -> list[dict]:
    """Min/max/mean rows over the per-seed rows of one (case, algo, solution)."""
    out = []
    for stat, fn in (("min", np.min), ("max", np.max), ("mean", np.mean)):
        row = dict(per_seed[0])
        row["seed"] = stat
        for col in ("rmse", "mede", "wall_ms"):
            vals = [r[col] for r in per_seed if r.get(col) is not None]
            row[col] = float(fn(vals)) if len(vals) == len(per_seed) else None
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# Artifact rendering
# ---------------------------------------------------------------------------

def _render_overlay(target: GrayImage, warped: GrayImage, mask: np.ndarray) -> GrayImage:
    blend = np.where(mask, 0.5 * target.data + 0.5 * warped.data, target.data)
    return GrayImage(blend)


def _render_surface(mesh: ControlMesh, target_w: int, target_h: int) -> np.ndarray:
    """White canvas with the deformed surface (green) and control points (red)."""
    canvas = np.full((target_h, target_w, 3), 255.0)
    cfg = mesh.config
    ox, oy = frame_offset(cfg, target_w, target_h)
    src, dst = warp_forward_points(mesh, 4)
    px = np.round(dst[:, 0] + ox).astype(int)
    py = np.round(dst[:, 1] + oy).astype(int)
    ok = (px >= 0) & (px < target_w) & (py >= 0) & (py < target_h)
    canvas[py[ok], px[ok]] = (0.0, 160.0, 0.0)
    for b in range(cfg.n_y):
        for a in range(cfg.n_x):
            cx = (a - 1) * cfg.s_x + ox + mesh.displacements[b, a, 0]
            cy = (b - 1) * cfg.s_y + oy + mesh.displacements[b, a, 1]
            x0, y0 = int(round(cx)), int(round(cy))
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    x, y = x0 + dx, y0 + dy
                    if 0 <= x < target_w and 0 <= y < target_h:
                        canvas[y, x] = (220.0, 0.0, 0.0)
    return canvas


def _solution_record(genes, objectives, mesh, template, target, gt_mesh) -> dict:
    rec = {
        "genes": [float(g) for g in genes],
        "objectives": None if objectives is None else [float(v) for v in objectives],
        "rmse": rmse(mesh, template, target),
        "mede": mede(mesh, gt_mesh) if gt_mesh is not None else None,
    }
    return rec


# ---------------------------------------------------------------------------
# Core per-pair driver shared by register and bench
# ---------------------------------------------------------------------------

def _run_pair(
    cfg: RunConfig,
    template: GrayImage,
    target: GrayImage,
    seed: int,
    algo: str,
    groups: int,
) -> tuple[RegistrationResult, float]:
    tpl_pyr = build_pyramid(template, cfg.levels)
    tgt_pyr = build_pyramid(target, cfg.levels)
    plans = plan_levels(
        cfg.lattice, cfg.levels, tpl_pyr, tgt_pyr,
        (-cfg.range_limit, cfg.range_limit), cfg.level_budgets(),
    )
    t0 = time.perf_counter()
    result = run_coarse_to_fine(
        algo, plans, groups, seed,
        pop_size=cfg.pop, stride=cfg.stride,
        sbx_prob=cfg.sbx_prob, sbx_eta=cfg.sbx_eta,
        mut_prob=cfg.mut_prob, mut_eta=cfg.mut_eta,
        ref_divisions=cfg.ref_divisions,
        collect_history=cfg.dump_levels,
    )
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return result, wall_ms


def _metric_rows_for_result(
    cfg: RunConfig,
    result: RegistrationResult,
    template: GrayImage,
    target: GrayImage,
    gt_mesh: ControlMesh | None,
    meta: dict,
    seed: int,
    algo: str,
    groups: int,
    wall_ms: float,
) -> tuple[list[dict], dict]:
    lattice = result.lattice
    best_mesh = genes_to_mesh(result.best.genes, lattice)
    records = {"best": _solution_record(
        result.best.genes, result.best.objectives, best_mesh, template, target, gt_mesh
    )}
    if algo != "ga":
        post_mesh = genes_to_mesh(result.post_processed.genes, lattice)
        records["post"] = _solution_record(
            result.post_processed.genes, result.post_processed.objectives,
            post_mesh, template, target, gt_mesh,
        )
    rows = []
    for solution, rec in records.items():
        rows.append(
            {
                **meta,
                "algo": algo,
                "groups": groups,
                "seed": seed,
                "solution": solution,
                "rmse": rec["rmse"],
                "mede": rec["mede"],
                "wall_ms": round(wall_ms, 3) if cfg.with_timing else None,
            }
        )
    return rows, records


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_register(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    try:
        template = read_image(args.template)
        target = read_image(args.target)
        gt_mesh = load_mesh(args.gt_mesh) if args.gt_mesh else None
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read inputs: {exc}") from exc

    out_dir = _prepare_out_dir(args.out, cfg.force)
    _setup_logging(out_dir)
    log.info("register: %s -> %s, algo=%s groups=%d lattice=%dx%d",
             args.template, args.target, cfg.algo, cfg.groups, *cfg.lattice)

    meta = {
        "image": Path(args.template).stem,
        "kind": "",
        "lattice": f"{cfg.lattice[0]}x{cfg.lattice[1]}",
        "range": cfg.range_limit,
    }
    all_rows: list[dict] = []
    per_solution: dict[str, list[dict]] = {}
    for seed in cfg.seeds:
        try:
            result, wall_ms = _run_pair(cfg, template, target, seed, cfg.algo, cfg.groups)
        except ValueError as exc:
            raise ConfigError(f"cannot run this configuration: {exc}") from exc
        rows, records = _metric_rows_for_result(
            cfg, result, template, target, gt_mesh, meta, seed, cfg.algo, cfg.groups, wall_ms
        )
        all_rows.extend(rows)
        for row in rows:
            per_solution.setdefault(row["solution"], []).append(row)
        _write_seed_artifacts(out_dir, cfg, result, records, template, target, seed)
        log.info("seed %d done: best rmse %.4f (%.0f ms)", seed, records["best"]["rmse"], wall_ms)

    for solution in per_solution.values():
        all_rows.extend(_aggregate_rows(solution))
    _write_csv(out_dir / "metrics.csv", all_rows)
    log.info("wrote %s", out_dir / "metrics.csv")
    return 0


def _write_seed_artifacts(
    out_dir: Path,
    cfg: RunConfig,
    result: RegistrationResult,
    records: dict,
    template: GrayImage,
    target: GrayImage,
    seed: int,
) -> None:
    seed_dir = out_dir / f"seed{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    lattice = result.lattice
    best_mesh = genes_to_mesh(result.best.genes, lattice)
    warped, mask = warp_backward(template, best_mesh, target.width, target.height)

    doc = {
        "seed": seed,
        "algo": cfg.algo,
        "groups": cfg.groups,
        "lattice": {"n_x": lattice.n_x, "n_y": lattice.n_y},
        "range": [-cfg.range_limit, cfg.range_limit],
        "levels": cfg.levels,
        "budget": cfg.budget,
        "budget_scope": cfg.budget_scope,
        "stride": cfg.stride,
        "pop": cfg.pop,
        "pareto_front": result.pareto_front,
        "group_winners": result.group_winners,
        "solutions": records,
    }
    (seed_dir / "result.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
    save_mesh(best_mesh, seed_dir / "best_mesh.json")
    write_png(warped, seed_dir / "deformed.png")
    write_png(_render_overlay(target, warped, mask), seed_dir / "overlay.png")
    write_png_rgb(_render_surface(best_mesh, target.width, target.height), seed_dir / "surface.png")
    if cfg.algo != "ga":
        post_mesh = genes_to_mesh(result.post_processed.genes, lattice)
        save_mesh(post_mesh, seed_dir / "post_mesh.json")
    if cfg.dump_levels:
        levels_dir = seed_dir / "levels"
        levels_dir.mkdir(exist_ok=True)
        for snap in result.per_level_history:
            path = levels_dir / f"level{snap['level']}.json"
            path.write_text(json.dumps(snap, sort_keys=True))


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out_dir = _prepare_out_dir(args.out, cfg.force)
    _setup_logging(out_dir)

    if args.base:
        try:
            bases = [(Path(p).stem, read_image(p)) for p in args.base]
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read base image: {exc}") from exc
    else:
        bases = [
            (f"tex{k}", procedural_texture(args.base_size, k)) for k in range(args.textures)
        ]

    kinds = [k.strip() for k in args.kinds.split(",")]
    lattices = [_parse_lattice(s) for s in args.lattices.split(",")]
    ranges = [float(r) for r in args.ranges.split(",")]
    cases = []
    for name, base in bases:
        base_path = out_dir / f"{name}_base.png"
        write_png(base, base_path)
        for kind in kinds:
            for nx, ny in lattices:
                for limit in ranges:
                    case_name = f"{name}_{kind}_{nx}x{ny}_r{limit:g}"
                    lattice_cfg = LatticeConfig.for_image(
                        nx, ny, args.template_size, args.template_size
                    )
                    gt = generate_wavy_mesh(
                        lattice_cfg, kind, limit, cycles=args.cycles, phase=args.phase
                    )
                    case = synthesize_case(base, args.template_size, gt, kind=kind)
                    case_dir = out_dir / case_name
                    case_dir.mkdir(exist_ok=True)
                    write_png(case.template, case_dir / "template.png")
                    write_png(case.target, case_dir / "target.png")
                    save_mesh(gt, case_dir / "gt_mesh.json")
                    cases.append(
                        {
                            "name": case_name,
                            "image": name,
                            "base": str(base_path.relative_to(out_dir)),
                            "kind": kind,
                            "lattice": [nx, ny],
                            "range": limit,
                            "template": f"{case_name}/template.png",
                            "target": f"{case_name}/target.png",
                            "gt_mesh": f"{case_name}/gt_mesh.json",
                        }
                    )
    manifest = {"template_size": args.template_size, "cases": cases}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    log.info("wrote %d cases to %s", len(cases), out_dir / "manifest.json")
    return 0


def _parse_algo_specs(text: str) -> list[tuple[str, int]]:
    """Parse 'ga,nsga2:2,nsga3:4' into (algorithm, groups) pairs."""
    specs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            name, _, gtxt = item.partition(":")
            try:
                groups = int(gtxt)
            except ValueError as exc:
                raise ConfigError(f"bad algorithm spec {item!r}") from exc
        else:
            name, groups = item, 1 if item == "ga" else 2
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}")
        if name == "ga" and groups != 1:
            raise ConfigError("ga requires groups = 1")
        if name != "ga" and groups not in (2, 4):
            raise ConfigError(f"{name} requires groups 2 or 4")
        specs.append((name, groups))
    if not specs:
        raise ConfigError("no algorithms requested")
    return specs


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    specs = _parse_algo_specs(args.algos)
    try:
        manifest_path = Path(args.manifest)
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest: {exc}") from exc

    out_dir = _prepare_out_dir(args.out, cfg.force)
    _setup_logging(out_dir)
    root = manifest_path.parent

    all_rows: list[dict] = []
    for case in manifest["cases"]:
        try:
            template = read_image(root / case["template"])
            target = read_image(root / case["target"])
            gt_mesh = load_mesh(root / case["gt_mesh"]) if case.get("gt_mesh") else None
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read case {case.get('name')}: {exc}") from exc
        nx, ny = case["lattice"]
        meta = {
            "image": case.get("image", case["name"]),
            "kind": case["kind"],
            "lattice": f"{nx}x{ny}",
            "range": float(case["range"]),
        }
        case_cfg = replace(
            cfg, lattice=(nx, ny), range_limit=float(case["range"])
        )
        for algo, groups in specs:
            per_solution: dict[str, list[dict]] = {}
            for seed in cfg.seeds:
                try:
                    result, wall_ms = _run_pair(case_cfg, template, target, seed, algo, groups)
                except ValueError as exc:
                    raise ConfigError(
                        f"cannot run case {case.get('name')}: {exc}"
                    ) from exc
                rows, _ = _metric_rows_for_result(
                    case_cfg, result, template, target, gt_mesh, meta, seed, algo, groups, wall_ms
                )
                all_rows.extend(rows)
                for row in rows:
                    per_solution.setdefault(row["solution"], []).append(row)
                log.info(
                    "case %s algo %s:%d seed %d: best rmse %.4f (%.0f ms)",
                    case["name"], algo, groups, seed, rows[0]["rmse"], wall_ms,
                )
            for rows in per_solution.values():
                all_rows.extend(_aggregate_rows(rows))
    _write_csv(out_dir / "metrics.csv", all_rows)
    log.info("wrote %s", out_dir / "metrics.csv")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        mesh = load_mesh(args.mesh)
        template = read_image(args.template)
        target = read_image(args.target)
        gt = load_mesh(args.gt_mesh) if args.gt_mesh else None
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read inputs: {exc}") from exc
    try:
        score = rmse(mesh, template, target)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(f"rmse {score!r}")
    if gt is not None:
        print(f"mede {mede(mesh, gt)!r}")
    return 0


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file; flags override it")
    parser.add_argument("--seed", help="comma-separated seed list, e.g. 0,1,2,3,4")
    parser.add_argument("--lattice", help="finest lattice, e.g. 7x7")
    parser.add_argument("--range", type=float, help="decision range R for [-R, R]")
    parser.add_argument("--levels", type=int, help="pyramid levels")
    parser.add_argument("--budget", type=int, help="evaluations (per level by default)")
    parser.add_argument("--budget-scope", choices=["level", "total"], dest="budget_scope")
    parser.add_argument("--stride", type=int, help="target sampling stride in pixels")
    parser.add_argument("--pop", type=int, help="population size")
    parser.add_argument("--ref-divisions", type=int, dest="ref_divisions",
                        help="reference point divisions (nsga3)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--force", action="store_true", help="overwrite existing outputs")
    parser.add_argument("--with-timing", action="store_true", dest="with_timing",
                        help="store wall-clock times in the CSV (breaks byte reproducibility)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffdreg",
        description="Deformation estimation with B-spline FFD and evolutionary search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="register one template/target pair")
    p.add_argument("--template", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--gt-mesh", dest="gt_mesh", help="ground-truth mesh JSON for MEDE")
    p.add_argument("--algo", choices=list(ALGORITHMS))
    p.add_argument("--groups", type=int)
    p.add_argument("--dump-levels", action="store_true", dest="dump_levels")
    _add_common(p)
    p.set_defaults(fn=cmd_register)

    p = sub.add_parser("synth", help="generate synthetic wavy cases + manifest")
    p.add_argument("--base", action="append",
                   help="base image (repeatable); procedural textures when omitted")
    p.add_argument("--textures", type=int, default=5, help="number of procedural bases")
    p.add_argument("--base-size", type=int, default=400, dest="base_size")
    p.add_argument("--template-size", type=int, default=160, dest="template_size")
    p.add_argument("--kinds", default="vertical,both")
    p.add_argument("--lattices", default="7x7,11x11",
                   help="comma-separated lattice list (NxN form)")
    p.add_argument("--ranges", default="5,10")
    p.add_argument("--cycles", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("bench", help="run a case manifest through algorithms and seeds")
    p.add_argument("--manifest", required=True)
    p.add_argument("--algos", default="ga,nsga2:2,nsga3:2,nsga3:4",
                   help="algorithm list, e.g. ga,nsga2:2,nsga3:4")
    _add_common(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("eval", help="score an existing mesh JSON")
    p.add_argument("--mesh", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--gt-mesh", dest="gt_mesh")
    p.set_defaults(fn=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
