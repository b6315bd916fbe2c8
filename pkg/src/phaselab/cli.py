"""Command-line orchestration: config parsing, experiment modes, artifacts.

Configuration is a flat text file of dotted key = value lines, e.g.

    mesh.family = icosphere
    mesh.subdivisions = 5
    epsilon = 0.2, 0.1, 0.05, 0.02
    V = 1.5707963267948966
    flow.max_steps = 20000

Any key can be overridden by an environment variable with the
``PHASELAB_`` prefix: ``PHASELAB_FLOW_TAU0=0.5`` sets ``flow.tau0``
(the first underscore separates the section). Results are written as
JSON-lines records and CSV tables under the output directory; every
file starts with the full configuration for reproducibility, and the
timestamp lives in a separate header record so the data lines are
byte-comparable across reruns.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import mesh as mesh_mod
from . import multiplicity as multi_mod
from . import photography as photo_mod
from . import profile as profile_mod
from . import potential as potential_mod
from .barycenter import homotopy_audit as _homotopy_audit
from .energy import FlowConfig as _FlowConfig
from .energy import multiplier_audit as _multiplier_audit
from .energy import solve_constrained as _solve_constrained

logger = logging.getLogger(__name__)

ENV_PREFIX = "PHASELAB_"

DEFAULTS = {
    "mesh.family": "icosphere",
    "mesh.subdivisions": "4",
    "mesh.a": "1", "mesh.b": "1", "mesh.c": "1.3",
    "mesh.R": "2", "mesh.r": "0.7", "mesh.nu": "48", "mesh.nv": "24",
    "mesh.inj_estimate": "",
    "potential.id": "quartic",
    "epsilon": "0.05",
    "V": "0.4",
    "profile.n_samples": "1024",
    "profile.c_exponent": "1.5",
    "profile.alpha": "0",
    "profile.beta": "1",
    "flow.tau0": "1.0",
    "flow.max_steps": "20000",
    "flow.tol_grad": "",
    "flow.backtrack": "0.5",
    "flow.cg_rtol": "1e-10",
    "flow.record_every": "0",
    "photograph.base_point": "0",
    "sweep.seed_kind": "farthest_point",
    "sweep.n_seeds": "30",
    "sweep.seed_start": "0",
    "sweep.delta_margin": "",
    "sweep.l2_threshold": "0.05",
    "sweep.energy_threshold": "0.02",
    "sweep.k_max": "12",
    "audit.n_points": "20",
    "audit.rng_seed": "0",
}


def parse_config(path=None):
    """Defaults, then the config file, then environment overrides."""
    cfg = dict(DEFAULTS)
    if path:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, val = (part.strip() for part in line.split("=", 1))
                cfg[key] = val
    for name, val in os.environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        if "_" in rest:
            section, tail = rest.split("_", 1)
            key = f"{section}.{tail}"
        else:
            key = rest
        # environment names are case-folded; recover the canonical spelling
        canonical = {k.lower(): k for k in cfg}
        cfg[canonical.get(key, key)] = val
    return cfg


def _floats(cfg, key):
    return [float(tok) for tok in cfg[key].replace(",", " ").split()]


def _opt_float(cfg, key):
    return float(cfg[key]) if cfg[key] != "" else None


def build_mesh(cfg, mesh_path=None):
    path = mesh_path or cfg.get("mesh.path", "")
    inj = _opt_float(cfg, "mesh.inj_estimate")
    if path:
        return mesh_mod.load_mesh(path, inj_estimate=inj)
    family = cfg["mesh.family"]
    if family in ("icosphere", "sphere"):
        return mesh_mod.icosphere(int(cfg["mesh.subdivisions"]))
    if family == "ellipsoid":
        return mesh_mod.ellipsoid(float(cfg["mesh.a"]), float(cfg["mesh.b"]),
                                  float(cfg["mesh.c"]),
                                  int(cfg["mesh.subdivisions"]))
    if family == "torus":
        return mesh_mod.torus(float(cfg["mesh.R"]), float(cfg["mesh.r"]),
                              int(cfg["mesh.nu"]), int(cfg["mesh.nv"]))
    raise ValueError(f"unknown mesh.family {family!r}")


def build_potential(cfg):
    pid = cfg["potential.id"]
    if pid == "quartic":
        return potential_mod.quartic_standard()
    if pid == "polynomial":
        coeffs = _floats(cfg, "potential.coeffs")
        well = potential_mod.polynomial_well(
            coeffs,
            growth_constants={"A": float(cfg["potential.A"]),
                              "B": float(cfg["potential.B"]),
                              "p": float(cfg["potential.p"])},
            lower_upper_growth={"c1": float(cfg["potential.c1"]),
                                "c2": float(cfg["potential.c2"]),
                                "p1": float(cfg["potential.p1"]),
                                "p2": float(cfg["potential.p2"]),
                                "t0": float(cfg["potential.t0"])},
            barrier_delta=float(cfg["potential.barrier_delta"]))
        potential_mod.validate_assumptions(well)
        return well
    raise ValueError(f"unknown potential.id {pid!r}")


def build_flow_config(cfg):
    return _FlowConfig(
        tau0=float(cfg["flow.tau0"]),
        max_steps=int(cfg["flow.max_steps"]),
        tol_grad=_opt_float(cfg, "flow.tol_grad"),
        backtrack=float(cfg["flow.backtrack"]),
        cg_rtol=float(cfg["flow.cg_rtol"]),
        record_every=int(cfg["flow.record_every"]),
    )


def _photo_kwargs(cfg):
    return {"n_samples": int(cfg["profile.n_samples"]),
            "c_exponent": float(cfg["profile.c_exponent"])}


class Emitter:
    """Writes header-prefixed JSON-lines and CSV artifacts."""

    def __init__(self, out_dir, cfg):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg

    def jsonl(self, name, records):
        path = self.out / name
        with open(path, "w") as fh:
            fh.write(json.dumps({"config": self.cfg}, sort_keys=True) + "\n")
            fh.write(json.dumps({"timestamp": time.strftime(
                "%Y-%m-%dT%H:%M:%S")}) + "\n")
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return path

    def csv(self, name, rows, fieldnames):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps({"config": self.cfg}, sort_keys=True)
                     + "\n")
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            writer.writerows(rows)
        return path


def mode_profile(cfg, emit, args):
    well = build_potential(cfg)
    alpha = float(cfg["profile.alpha"])
    beta = float(cfg["profile.beta"])
    n = int(cfg["profile.n_samples"])
    records = []
    for eps in _floats(cfg, "epsilon"):
        table = profile_mod.build_profile(well, eps, alpha, beta, n,
                                          c_exponent=float(
                                              cfg["profile.c_exponent"]))
        table.to_csv(emit.out / f"profile_eps{eps:g}.csv")
        residual, spacing = profile_mod.profile_residual(table, well)
        records.append({"epsilon": eps, "eta": table.eta,
                        "residual": residual, "max_spacing": spacing,
                        "n_samples": n})
        print(f"profile eps={eps:g}: eta={table.eta:.6g} "
              f"residual={residual:.3g} (spacing {spacing:.3g})")
    emit.jsonl("profile_residuals.jsonl", records)
    return 0


def mode_photograph(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    x0 = int(cfg["photograph.base_point"])
    records = []
    for eps in _floats(cfg, "epsilon"):
        for V in _floats(cfg, "V"):
            photo = photo_mod.photograph(mesh, well, eps, V, x0,
                                         **_photo_kwargs(cfg))
            np.savetxt(emit.out / f"field_eps{eps:g}_V{V:g}.csv",
                       photo.field, delimiter=",", header="u", comments="")
            margin = _opt_float(cfg, "sweep.delta_margin")
            if margin is None:
                margin = 0.1 * photo_mod.sigma(well, 0.0, 1.0) \
                    * mesh_mod.EUCLIDEAN_C2 * V ** 0.5
            check = photo_mod.sublevel_check(mesh, well, eps, V, [photo],
                                             margin)
            records.append({"epsilon": eps, "V": V, "base_point": x0,
                            "r_V": photo.r_V, "delta": photo.delta,
                            "energy": photo.energy,
                            "ceiling": check["ceiling"],
                            "below": check["all_below"]})
            print(f"photograph eps={eps:g} V={V:g}: energy={photo.energy:.6g} "
                  f"ceiling={check['ceiling']:.6g} below={check['all_below']}")
    emit.jsonl("photographs.jsonl", records)
    return 0


def mode_flow(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    eps = _floats(cfg, "epsilon")[0]
    V = _floats(cfg, "V")[0]
    x0 = int(cfg["photograph.base_point"])
    u0 = photo_mod.photograph(mesh, well, eps, V, x0,
                              **_photo_kwargs(cfg)).field
    point = _solve_constrained(mesh, well, eps, V, u0,
                                         build_flow_config(cfg),
                                         base_point=x0)
    emit.jsonl("flow.jsonl", [point.record()])
    if point.trajectory:
        emit.csv("trajectory.csv",
                 [{"step": s, "energy": e, "grad_norm": g, "lambda": lam}
                  for s, e, g, lam in point.trajectory],
                 ["step", "energy", "grad_norm", "lambda"])
    print(f"flow: converged={point.converged} steps={point.steps} "
          f"energy={point.energy:.6g} lambda={point.lam:.6g}")
    return 0 if point.converged else 1


def mode_sweep(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    eps = _floats(cfg, "epsilon")[0]
    V = _floats(cfg, "V")[0]
    if args.seed_list:
        with open(args.seed_list) as fh:
            vertices = [int(tok) for tok in fh.read().split()]
        seed_spec = {"kind": "explicit", "vertices": vertices}
    else:
        seed_spec = {"kind": cfg["sweep.seed_kind"],
                     "n": int(cfg["sweep.n_seeds"]),
                     "start": int(cfg["sweep.seed_start"]),
                     "seed": int(cfg["audit.rng_seed"])}
    result = multi_mod.sweep(
        mesh, well, eps, V, seed_spec, build_flow_config(cfg),
        delta_margin=_opt_float(cfg, "sweep.delta_margin"),
        l2_threshold=float(cfg["sweep.l2_threshold"]),
        energy_threshold=float(cfg["sweep.energy_threshold"]),
        k_max=int(cfg["sweep.k_max"]),
        photo_kwargs=_photo_kwargs(cfg))
    doc = result.to_json_dict()
    doc["morse_report"] = multi_mod.morse_report(result)
    (emit.out / "sweep.json").write_text(json.dumps(
        {"config": cfg, "result": doc}, sort_keys=True, indent=2))
    emit.csv("sweep_classes.csv", result.summary_rows(),
             ["class", "energy", "lambda", "morse_index", "nearest_vertex",
              "size", "below_ceiling"])
    emit.jsonl("sweep_runs.jsonl", [r.record() for r in result.runs])
    print(f"sweep: distinct_total={result.counts['distinct_total']} "
          f"below_c={result.counts['distinct_below_c']} "
          f"reliable={result.reliable} "
          f"morse={doc['morse_report']}")
    return 0 if result.reliable else 1


def mode_gamma(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    V = _floats(cfg, "V")[0]
    x0 = int(cfg["photograph.base_point"])
    st = potential_mod.sigma(well, 0.0, 1.0)
    rows = []
    for eps in sorted(_floats(cfg, "epsilon"), reverse=True):
        photo = photo_mod.photograph(mesh, well, eps, V, x0,
                                     **_photo_kwargs(cfg))
        perim = mesh_mod.ball_perimeter(mesh, x0, photo.r_V)
        rows.append({"epsilon": eps, "energy": photo.energy,
                     "sigma_perimeter": st * perim,
                     "overshoot": photo.energy / (st * perim) - 1.0})
        print(f"gamma eps={eps:g}: energy={photo.energy:.6g} "
              f"target={st * perim:.6g} "
              f"overshoot={rows[-1]['overshoot']:+.3%}")
    emit.csv("gamma.csv", rows,
             ["epsilon", "energy", "sigma_perimeter", "overshoot"])
    return 0


def mode_audit_barycenter(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    eps = _floats(cfg, "epsilon")[0]
    V = _floats(cfg, "V")[0]
    rng = np.random.default_rng(int(cfg["audit.rng_seed"]))
    points = sorted(int(i) for i in rng.choice(
        mesh.n_vertices, size=int(cfg["audit.n_points"]), replace=False))
    report = _homotopy_audit(mesh, well, eps, V, points,
                                     **_photo_kwargs(cfg))
    emit.jsonl("homotopy_audit.jsonl",
               report["entries"] + [{"max": report["max"],
                                     "mean": report["mean"],
                                     "inj_estimate": report["inj_estimate"],
                                     "passed": report["passed"]}])
    print(f"homotopy audit: max={report['max']:.6g} mean={report['mean']:.6g} "
          f"inj={report['inj_estimate']} passed={report['passed']}")
    return 0 if report["passed"] else 1


def mode_audit_multiplier(cfg, emit, args):
    well = build_potential(cfg)
    mesh = build_mesh(cfg, args.mesh)
    V = _floats(cfg, "V")[0]
    x0 = int(cfg["photograph.base_point"])
    flow_cfg = build_flow_config(cfg)
    runs = []
    for eps in _floats(cfg, "epsilon"):
        u0 = photo_mod.photograph(mesh, well, eps, V, x0,
                                  **_photo_kwargs(cfg)).field
        runs.append(_solve_constrained(mesh, well, eps, V, u0,
                                                 flow_cfg, base_point=x0))
    report = _multiplier_audit(runs)
    emit.jsonl("multiplier_audit.jsonl",
               report["entries"] + [{"max_ratio": report["max_ratio"],
                                     "spread": report["spread"],
                                     "bounded": report["bounded"]}])
    print(f"multiplier audit: max ratio={report['max_ratio']:.6g} "
          f"spread={report['spread']:.3g} bounded={report['bounded']}")
    return 0 if report["bounded"] else 1


def mode_report(cfg, emit, args):
    """Aggregate run records found under the output directory into one CSV."""
    rows = []
    for path in sorted(Path(emit.out).glob("*.jsonl")):
        with open(path) as fh:
            for line in fh:
                rec = json.loads(line)
                if "energy" in rec and "epsilon" in rec:
                    rec["source"] = path.name
                    rows.append(rec)
    if not rows:
        print("report: no run records found")
        return 0
    fieldnames = sorted({k for r in rows for k in r})
    emit.csv("report.csv", rows, fieldnames)
    print(f"report: {len(rows)} records -> report.csv")
    return 0


MODES = {
    "profile": mode_profile,
    "photograph": mode_photograph,
    "flow": mode_flow,
    "sweep": mode_sweep,
    "gamma": mode_gamma,
    "audit-barycenter": mode_audit_barycenter,
    "audit-multiplier": mode_audit_multiplier,
    "report": mode_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="phaselab",
        description="Volume-constrained phase-transition laboratory on "
                    "closed surfaces")
    parser.add_argument("mode", choices=sorted(MODES))
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out", default="phaselab_out",
                        help="output directory (default: phaselab_out)")
    parser.add_argument("--threads", type=int, default=os.cpu_count(),
                        help="worker pool size for independent runs")
    parser.add_argument("--seed-list",
                        help="file of explicit seed vertex indices")
    parser.add_argument("--mesh", help="OFF or OBJ mesh path (overrides "
                                       "mesh.* config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        emit = Emitter(args.out, cfg)
        return MODES[args.mode](cfg, emit, args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
