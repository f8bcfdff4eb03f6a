"""Batch experiment driver: every pipeline as a config-driven command.

One process per experiment; configuration is a single JSON document with
dotted-path overrides from the command line.  Each run writes a manifest
(inputs, parameters, versions, wall time, metrics) plus data artifacts in
the documented formats.  Exit codes: 0 all tolerances met, 1 tolerance
failure (manifest still written), 2 invalid configuration, 3 internal
solver error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import qsweld
from .beltrami import (bump_field, dilatation, radial_stretch_field,
                       radial_stretch_map, solve_beltrami)
from .circlemaps import (CircleMap, identity_circle_map, make_circle_map,
                         qs_constant, qs_constant_line, rotation_map,
                         sine_perturbation)
from .errors import QsweldError
from .grids import (BeltramiField, GridSpec, PlaneMap, load_map,
                    polyline_from_csv, polyline_to_csv, save_map)
from .holotest import Stencil, holomorphy_report
from .motions import embed_in_motion
from .surfaces import (RiggedSurface, capped_invariants, invariants,
                       modulus, sew, sew_caps, sewn_invariants)
from .welding import quasicircle_check, weld

log = logging.getLogger("qsweld")

COMMANDS = ("weld", "sew", "caps", "motion", "family", "holotest", "qs",
            "modulus")


class ConfigError(Exception):
    """Invalid configuration (exit code 2)."""


# -- config handling ---------------------------------------------------------

def load_config(path: str, overrides=(), output=None) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into {part!r}")
        node[parts[-1]] = value
    if output is not None:
        config["output_dir"] = output
    return config


def validate_config(config: dict) -> dict:
    command = config.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; "
                          f"choose one of {COMMANDS}")
    if "output_dir" not in config:
        raise ConfigError("config needs an output_dir")
    grid_doc = config.get("grid", {"half_width": 2.0, "n": 256})
    try:
        grid = GridSpec(float(grid_doc["half_width"]), int(grid_doc["n"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad grid block: {exc}") from exc
    config["_grid"] = grid
    config.setdefault("tolerances", {})
    config.setdefault("inputs", {})
    config.setdefault("seed", 0)
    return config


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _circle_map_from_spec(spec, seed: int) -> CircleMap:
    if isinstance(spec, str):
        spec = {"path": spec}
    if "path" in spec:
        p = Path(spec["path"])
        if not p.exists():
            raise ConfigError(f"circle map file not found: {p}")
        return CircleMap.from_json(p.read_text())
    if "lift" in spec:
        return make_circle_map(np.asarray(spec["lift"], dtype=float))
    kind = spec.get("synthetic")
    m = int(spec.get("m", 512))
    if kind == "identity":
        return identity_circle_map(m)
    if kind == "rotation":
        return rotation_map(float(spec.get("alpha", 0.0)), m)
    if kind == "sine":
        return sine_perturbation(float(spec.get("amplitude", 0.3)), m,
                                 int(spec.get("mode", 1)))
    if kind == "mobius":
        a = float(spec.get("a", 0.3))
        th = np.linspace(0, 2 * np.pi, m)
        z = np.exp(1j * th)
        return make_circle_map(np.unwrap(np.angle((z - a) / (1 - a * z))))
    if kind == "random_fourier":
        rng = np.random.default_rng(seed)
        modes = int(spec.get("modes", 4))
        th = np.linspace(0, 2 * np.pi, m)
        pert = np.zeros_like(th)
        dpert = np.zeros_like(th)
        for k in range(1, modes + 1):
            amp = rng.normal() / k ** 2
            phase = rng.uniform(0, 2 * np.pi)
            pert += amp * np.sin(k * th + phase)
            dpert += amp * k * np.cos(k * th + phase)
        scale = 0.8 / max(1.0, np.max(np.abs(dpert)))
        return make_circle_map(th + scale * pert)
    raise ConfigError(f"cannot build a circle map from {spec!r}")


def _surface_from_spec(spec, grid: GridSpec) -> RiggedSurface:
    if isinstance(spec, str):
        spec = {"path": spec}
    if "path" in spec:
        p = Path(spec["path"])
        if not p.exists():
            raise ConfigError(f"surface file not found: {p}")
        doc = json.loads(p.read_text())
        marking = None
        if doc.get("marking"):
            from .grids import load_field
            mp = Path(doc["marking"])
            if not mp.is_absolute():
                mp = p.parent / mp
            if not mp.exists():
                raise ConfigError(f"marking container not found: {mp}")
            marking = load_field(mp)
        return RiggedSurface.from_json(p.read_text(), marking)
    if spec.get("synthetic") == "annulus":
        from .surfaces import annulus_surface
        rig = {}
        for side in ("inner", "outer"):
            r = spec.get(f"{side}_rigging")
            if r:
                rig[f"{side}_rigging"] = _circle_map_from_spec(r, 0)
        return annulus_surface(float(spec["r_inner"]),
                               float(spec["r_outer"]),
                               inner_orientation=spec.get(
                                   "inner_orientation", "in"),
                               outer_orientation=spec.get(
                                   "outer_orientation", "out"),
                               **rig)
    if spec.get("synthetic") == "four_boundary":
        from .circlemaps import sine_perturbation as sp
        from .surfaces import Disk
        m = int(spec.get("m", 256))
        disks = [Disk(0j, 0.1), Disk(0.55 + 0j, 0.1),
                 Disk(-0.55 + 0j, 0.1), Disk(0j, 2.0, exterior=True)]
        riggings = [sp(0.2, m), sp(-0.15, m, mode=2), sp(0.1, m),
                    identity_circle_map(m)]
        return RiggedSurface(disks, riggings, ["out", "in", "in", "out"])
    raise ConfigError(f"cannot build a surface from {spec!r}")


def _field_from_spec(spec, grid: GridSpec) -> BeltramiField:
    kind = spec.get("kind", "bump")
    if kind == "bump":
        return bump_field(grid, complex(*spec.get("center", (0.0, 0.0))),
                          float(spec.get("radius", 0.3)),
                          complex(*spec.get("amplitude", (0.3, 0.0))))
    if kind == "radial_stretch":
        return radial_stretch_field(grid, float(spec.get("k", 0.3)),
                                    float(spec.get("radius", 1.0)))
    raise ConfigError(f"unknown field kind {spec!r}")


# -- commands ----------------------------------------------------------------

def run_weld(config, outdir: Path):
    grid = config["_grid"]
    tol = float(config["tolerances"].get("residual", 1e-3))
    h = _circle_map_from_spec(config["inputs"].get("h", {}), config["seed"])
    # tolerance judged here so a miss still writes the manifest (exit 1)
    result = weld(h, grid, tol=float("inf"))
    save_map(outdir / "F.qwgr", result.F)
    save_map(outdir / "G.qwgr", result.G)
    polyline_to_csv(outdir / "seam.csv", result.seam)
    turning = quasicircle_check(result.seam)
    from .surfaces import best_fit_circle
    _, seam_r, seam_dev = best_fit_circle(result.seam)
    metrics = {
        "residual": float(result.residual),
        "qs_constant": float(result.qs_estimate),
        "seam_turning_constant": float(turning.turning_constant),
        "seam_refinement_stable": bool(turning.refinement_stable),
        "seam_circle_deviation": float(seam_dev / seam_r),
        "grid_n": grid.n,
    }
    return metrics, result.residual <= tol, \
        ["F.qwgr", "G.qwgr", "seam.csv"]


def run_sew(config, outdir: Path):
    grid = config["_grid"]
    tol = float(config["tolerances"].get("residual", 1e-3))
    ins = config["inputs"]
    x = _surface_from_spec(ins["x"], grid)
    y = _surface_from_spec(ins["y"], grid)
    sewn = sew(x, int(ins.get("i", 0)), y, int(ins.get("j", 0)), grid,
               tol=tol)
    polyline_to_csv(outdir / "seam.csv", sewn.seam)
    artifacts = ["seam.csv"]
    for k, b in enumerate(sewn.boundaries):
        name = f"boundary_{k}.csv"
        polyline_to_csv(outdir / name, b.polyline)
        artifacts.append(name)
    metrics = {
        "welding_residual": float(sewn.welding.residual),
        "chart_disagreement": float(sewn.chart_disagreement),
        "surviving_boundaries": len(sewn.boundaries),
    }
    ok = sewn.welding.residual <= tol
    if len(sewn.boundaries) == 2:
        inv = sewn_invariants(sewn)
        metrics["modulus"] = float(inv[0].real)
        expected = config["tolerances"].get("expected_modulus")
        if expected is not None:
            err = abs(inv[0].real - float(expected))
            metrics["modulus_error"] = float(err)
            bound = float(config["tolerances"].get("modulus_error", 1e-3))
            ok = ok and err <= bound
    return metrics, ok, artifacts


def run_caps(config, outdir: Path):
    grid = config["_grid"]
    x = _surface_from_spec(config["inputs"]["x"], grid)
    ps = sew_caps(x, grid)
    pts = ps.marked_points
    polyline_to_csv(outdir / "marked_points.csv", np.where(
        np.isfinite(pts), pts, 1e30 + 0j))
    inv = invariants(ps)
    metrics = {
        "marked_points": [[p.real, p.imag] for p in pts],
        "invariants": [[v.real, v.imag] for v in inv],
    }
    return metrics, True, ["marked_points.csv"]


def run_motion(config, outdir: Path):
    grid = config["_grid"]
    ins = config["inputs"]
    k = float(ins.get("k", 0.3))
    u = PlaneMap(grid, radial_stretch_map(grid.mesh(), k)) \
        if ins.get("u", "radial_stretch") == "radial_stretch" \
        else load_map(ins["u"]["path"])
    fam = embed_in_motion(u)
    ut = fam.sample(fam.t_star)
    z = grid.mesh()
    mask = np.abs(z) <= 2.0
    recovery = float(np.max(np.abs(ut.values[mask] - u.values[mask])))
    budget = []
    slack = float(config["tolerances"].get("budget_slack", 0.05))
    ok = True
    for t in (0.1, 0.3, 0.5):
        w = fam.sample(t)
        mu = dilatation(w)
        sup = float(np.max(np.abs(mu.values[np.abs(z) < 1.8])))
        k_meas = (1 + sup) / (1 - sup)
        bound = (1 + t) / (1 - t) + slack
        budget.append({"t": t, "K": k_meas, "bound": bound})
        ok = ok and k_meas <= bound
    rec_tol = float(config["tolerances"].get("recovery", 5e-3))
    ok = ok and recovery <= rec_tol
    save_map(outdir / "u_star.qwgr", ut)
    metrics = {"k": fam.k, "ell": fam.ell, "recovery_error": recovery,
               "budget": budget}
    return metrics, ok, ["u_star.qwgr"]


def _stencil_params(config):
    st = config["inputs"].get("stencil", {})
    center = complex(*st.get("center", (0.0, 0.0)))
    radius = float(st.get("radius", 0.05))
    radii = tuple(float(f) * radius for f in st.get("fractions", (0.3, 0.6)))
    angles = int(st.get("angles_per_ring", 8))
    return center, radii, angles


def run_family(config, outdir: Path):
    """Capped-invariant family over a parameter stencil.

    kind "marking" scales a field by t (or conj(t) for the
    anti-holomorphic control) on top of the base surface's marking; kind
    "cutout" translates an identity-rigged round cut-out through a fixed
    marking disjoint from its sweep and caps it back.
    """
    grid = config["_grid"]
    ins = config["inputs"]
    dependence = ins.get("dependence", "holomorphic")
    if dependence not in ("holomorphic", "antiholomorphic"):
        raise ConfigError(f"unknown dependence {dependence!r}")
    center, radii, angles = _stencil_params(config)
    ts = Stencil.t_values(center, radii, angles)
    save_maps = bool(ins.get("save_maps", False))
    kind = ins.get("kind", "marking")

    if kind == "marking":
        x = _surface_from_spec(ins["surface"], grid)
        field = _field_from_spec(ins.get("field", {}), grid)

        def run_one(t):
            factor = t if dependence == "holomorphic" else np.conj(t)
            extra = field.scaled(factor)
            inv = capped_invariants(x, grid, extra_field=extra)
            ps = None
            if save_maps:
                ps = sew_caps(x.with_marking(
                    _total_field(x, extra, grid)), grid)
            return inv, ps
    elif kind == "cutout":
        from .surfaces import Disk
        cut = ins.get("cutout", {})
        q0 = complex(*cut.get("center", (0.45, 0.0)))
        r0 = float(cut.get("radius", 0.22))
        vel = complex(*cut.get("velocity", (1.0, 0.5)))
        field = _field_from_spec(ins.get("field", {}), grid)

        def run_one(t):
            factor = t if dependence == "holomorphic" else np.conj(t)
            x_t = RiggedSurface([Disk(q0 + factor * vel, r0)],
                                [identity_circle_map(64)], ["out"],
                                marking=field)
            ps = sew_caps(x_t, grid)
            # the solve pins 0, 1, infinity, so the cap position is the
            # normalized invariant of the four distinguished points
            return ps.marked_points[:1], ps if save_maps else None
    else:
        raise ConfigError(f"unknown family kind {kind!r}")

    samples = []
    outputs = []
    for idx, t in enumerate(ts):
        inv, ps = run_one(t)
        entry = {"t": [t.real, t.imag],
                 "invariants": [[v.real, v.imag] for v in inv]}
        samples.append(entry)
        if save_maps and ps is not None:
            name = f"sample_{idx:02d}.qwgr"
            save_map(outdir / name, ps.uniformizer)
            outputs.append(name)
    manifest = {
        "stencil": {"center": [center.real, center.imag],
                    "radii": list(radii), "angles_per_ring": angles},
        "t_samples": [[t.real, t.imag] for t in ts],
        "samples": samples,
        "outputs": outputs,
        "dependence": dependence,
    }
    (outdir / "family.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1))
    return {"n_samples": len(ts),
            "dimension": len(samples[0]["invariants"])}, True, \
        ["family.json"] + outputs


def _total_field(x, extra, grid):
    base = x.marking.values if x.marking is not None else 0.0
    return BeltramiField(grid, base + extra.values, grid.half_width / 2)


def run_holotest(config, outdir: Path):
    ins = config["inputs"]
    manifest = ins.get("manifest")
    if manifest is None:
        raise ConfigError("holotest needs inputs.manifest")
    mp = Path(manifest)
    if not mp.exists():
        raise ConfigError(f"family manifest not found: {mp}")
    cr_thr = float(config["tolerances"].get("cr", 1e-3))
    mo_thr = float(config["tolerances"].get("morera", 1e-3))
    verdict, provenance = holomorphy_report(
        str(mp), ins.get("selector", "invariants"),
        cr_threshold=cr_thr, morera_threshold=mo_thr)
    doc = verdict.to_json()
    doc["inputs"] = provenance["inputs"]
    (outdir / "verdict.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1))
    metrics = {"cr": verdict.cr_residual, "morera": verdict.morera_residual,
               "pass": verdict.passed}
    return metrics, verdict.passed, ["verdict.json"]


def run_qs(config, outdir: Path):
    ins = config["inputs"]
    densities = [int(d) for d in ins.get("densities", (256, 1024))]
    if "line" in ins:
        fn = {"cubic": lambda x: x ** 3,
              "affine": lambda x: 2.0 * x}.get(ins["line"])
        if fn is None:
            raise ConfigError(f"unknown line map {ins['line']!r}")
        reports = [qs_constant_line(fn, d) for d in densities]
    else:
        h = _circle_map_from_spec(ins.get("h", {}), config["seed"])
        reports = [qs_constant(h, d) for d in densities]
    estimates = [r.k_estimate for r in reports]
    metrics = {"densities": densities, "estimates": estimates,
               "worst_pairs": [list(r.worst_pair) for r in reports]}
    ok = True
    target = config["tolerances"].get("target")
    if target is not None:
        rel = abs(estimates[-1] - float(target)) / float(target)
        metrics["relative_error"] = rel
        ok = rel <= float(config["tolerances"].get("rel_err", 0.02))
    return metrics, ok, []


def run_modulus(config, outdir: Path):
    ins = config["inputs"]

    def polyline(spec):
        if isinstance(spec, dict) and "circle" in spec:
            th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
            c = complex(*spec.get("center", (0.0, 0.0)))
            return c + float(spec["circle"]) * np.exp(1j * th)
        p = Path(spec)
        if not p.exists():
            raise ConfigError(f"polyline file not found: {p}")
        return polyline_from_csv(p)

    inner = polyline(ins["inner"])
    outer = polyline(ins["outer"])
    value = modulus(inner, outer, n=int(ins.get("laplace_n", 281)))
    metrics = {"modulus": value}
    ok = True
    expected = config["tolerances"].get("expected")
    if expected is not None:
        err = abs(value - float(expected))
        metrics["error"] = err
        ok = err <= float(config["tolerances"].get("abs_err", 1e-3))
    return metrics, ok, []


RUNNERS = {
    "weld": run_weld, "sew": run_sew, "caps": run_caps,
    "motion": run_motion, "family": run_family, "holotest": run_holotest,
    "qs": run_qs, "modulus": run_modulus,
}


# -- driver ------------------------------------------------------------------

def run(config: dict) -> int:
    """Execute one experiment; returns the process exit code."""
    try:
        config = validate_config(dict(config))
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return 2
    outdir = Path(config["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        metrics, ok, artifacts = RUNNERS[config["command"]](config, outdir)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return 2
    except QsweldError as exc:
        log.error("solver error: %s", exc)
        diag = {"error": type(exc).__name__, "message": str(exc)}
        (outdir / "error.json").write_text(json.dumps(diag, indent=1))
        return 3
    wall = time.perf_counter() - t0

    params = {k: v for k, v in config.items() if not k.startswith("_")}
    input_hashes = {}
    for art in artifacts:
        p = outdir / art
        if p.exists():
            input_hashes[art] = _hash_file(p)
    manifest = {
        "command": config["command"],
        "parameters": params,
        "versions": {"qsweld": qsweld.__version__,
                     "numpy": np.__version__,
                     "scipy": __import__("scipy").__version__},
        "metrics": metrics,
        "tolerances": config["tolerances"],
        "pass": bool(ok),
        "artifacts": input_hashes,
        "wall_time_s": wall,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1, default=float))
    log.info("%s: pass=%s wall=%.2fs -> %s", config["command"], ok, wall,
             outdir)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qsweld",
        description="welding, sewing, and holomorphy experiments on grids")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted-path config override")
    parser.add_argument("--output", help="override output_dir")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--json-logs", action="store_true")
    args = parser.parse_args(argv)

    handler = logging.StreamHandler()
    if args.json_logs:
        class JsonFormatter(logging.Formatter):
            def format(self, record):
                return json.dumps({"level": record.levelname,
                                   "name": record.name,
                                   "message": record.getMessage()})
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.ERROR if args.quiet else logging.INFO)

    try:
        config = load_config(args.config, args.set, args.output)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
