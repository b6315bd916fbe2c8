"""Critical-point counting: seed sweeps, deduplication, topology cards.

A sweep flows the photographs of many base points (plus the constant
state) to critical points, merges near-identical outcomes into classes,
and compares the class counts against the topological lower bounds of
the underlying surface: cat(M), cat(M) + 1, and the Morse-theoretic
2 P1(M) - 1.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import photography
from .barycenter import barycenter as _field_barycenter
from .barycenter import project_to_mesh as _project_to_mesh
from .energy import FlowConfig, morse_index, solve_constrained
from .mesh import EUCLIDEAN_C2
from .potential import sigma

logger = logging.getLogger(__name__)

__all__ = ["TopologyCard", "SweepResult", "topology_card", "farthest_point_seeds",
           "subsample_seeds", "sweep", "dedupe", "morse_report"]

L2_THRESHOLD = 0.05
ENERGY_THRESHOLD = 0.02


@dataclass
class TopologyCard:
    family_tag: str
    cat: int
    betti: tuple
    p1: int

    def __post_init__(self):
        if self.p1 != sum(self.betti):
            raise ValueError("total Betti number does not match the list")


@dataclass
class SweepResult:
    epsilon: float
    V: float
    potential: str
    mesh_family: str
    classes: list
    counts: dict
    morse_tally: list
    runs: list
    reliable: bool
    seeds: list
    ceiling: float

    def to_json_dict(self):
        return {
            "epsilon": self.epsilon,
            "V": self.V,
            "potential": self.potential,
            "mesh_family": self.mesh_family,
            "counts": self.counts,
            "morse_tally": self.morse_tally,
            "reliable": self.reliable,
            "seeds": list(self.seeds),
            "ceiling": self.ceiling,
            "classes": [
                {
                    "energy": c["representative"].energy,
                    "lambda": c["representative"].lam,
                    "morse_index": c["representative"].morse_index,
                    "nondegenerate": c["representative"].nondegenerate,
                    "members": c["members"],
                    "size": c["size"],
                    "below_ceiling": c["below_ceiling"],
                    "is_constant": c["is_constant"],
                }
                for c in self.classes
            ],
        }

    def summary_rows(self):
        """CSV-ready rows: one per class."""
        rows = []
        for k, c in enumerate(self.classes):
            rep = c["representative"]
            rows.append({"class": k, "energy": rep.energy, "lambda": rep.lam,
                         "morse_index": rep.morse_index,
                         "nearest_vertex": c["nearest_vertex"],
                         "size": c["size"],
                         "below_ceiling": c["below_ceiling"]})
        return rows


_CARDS = {
    "sphere": TopologyCard("sphere", 2, (1, 0, 1), 2),
    "ellipsoid": TopologyCard("ellipsoid", 2, (1, 0, 1), 2),
    "torus": TopologyCard("torus", 3, (1, 2, 1), 4),
}


def topology_card(family_tag, genus=None):
    """Tabulated category and Betti numbers for the supported families."""
    if family_tag in _CARDS:
        return _CARDS[family_tag]
    if family_tag == "genus_g":
        if genus is None or genus < 2:
            raise ValueError("genus_g card needs genus >= 2")
        return TopologyCard(f"genus_{genus}", 3, (1, 2 * genus, 1),
                            2 * genus + 2)
    raise ValueError(f"no topology card for family {family_tag!r}; declare "
                     "one of sphere, ellipsoid, torus, genus_g")


def farthest_point_seeds(mesh, n, start=0):
    """Greedy farthest-point sample of n vertices, starting from `start`."""
    if n < 1:
        raise ValueError("need at least one seed")
    seeds = [int(start)]
    nearest = mesh.graph_distances(start)[0]
    while len(seeds) < n:
        nxt = int(np.argmax(nearest))
        seeds.append(nxt)
        nearest = np.minimum(nearest, mesh.graph_distances(nxt)[0])
    return seeds


def subsample_seeds(mesh, n, seed=0):
    rng = np.random.default_rng(seed)
    return sorted(int(i) for i in
                  rng.choice(mesh.n_vertices, size=n, replace=False))


def _resolve_seeds(mesh, seed_spec):
    kind = seed_spec["kind"]
    if kind == "farthest_point":
        return farthest_point_seeds(mesh, seed_spec["n"],
                                    seed_spec.get("start", 0))
    if kind == "all_vertices_subsample":
        return subsample_seeds(mesh, seed_spec["n"], seed_spec.get("seed", 0))
    if kind == "explicit":
        return [int(i) for i in seed_spec["vertices"]]
    raise ValueError(f"unknown seed kind {seed_spec['kind']!r}")


def sweep(mesh, well, epsilon, V, seed_spec, cfg=None, delta_margin=None,
          l2_threshold=L2_THRESHOLD, energy_threshold=ENERGY_THRESHOLD,
          k_max=12, photo_kwargs=None, compute_morse=True):
    """Flow photographs at many seeds, deduplicate, count, and predict.

    Appends the constant state V/|M| to the seed list; a run below 50%
    seed convergence marks the result unreliable. The low-energy tally
    uses the ceiling sigma c2 sqrt(V) + delta_margin (default margin:
    10% of the leading term).
    """
    cfg = cfg or FlowConfig()
    photo_kwargs = photo_kwargs or {}
    seeds = _resolve_seeds(mesh, seed_spec)
    surface_tension = sigma(well, 0.0, 1.0)
    lead = surface_tension * EUCLIDEAN_C2 * math.sqrt(V)
    if delta_margin is None:
        delta_margin = 0.1 * lead
    ceiling = lead + delta_margin

    runs = []
    for x0 in seeds:
        try:
            u0 = photography.photograph(mesh, well, epsilon, V, x0,
                                        **photo_kwargs).field
            runs.append(solve_constrained(mesh, well, epsilon, V, u0, cfg,
                                          base_point=x0))
        except (ValueError, RuntimeError) as exc:
            logger.warning("seed %d failed: %s", x0, exc)
    const = np.full(mesh.n_vertices, V / mesh.total_area)
    runs.append(solve_constrained(mesh, well, epsilon, V, const, cfg,
                                  base_point=None))

    converged = [r for r in runs if r.converged]
    n_seed_runs = len(runs) - 1
    n_seed_converged = sum(1 for r in converged if r.base_point is not None)
    reliable = n_seed_runs > 0 and n_seed_converged >= 0.5 * n_seed_runs
    if not reliable:
        logger.warning("only %d of %d seeds converged; sweep unreliable",
                       n_seed_converged, n_seed_runs)

    classes = dedupe(converged, mesh, l2_threshold=l2_threshold,
                     energy_threshold=energy_threshold)
    const_norm = V / math.sqrt(mesh.total_area)
    for c in classes:
        rep = c["representative"]
        if compute_morse:
            _attach_morse(mesh, well, epsilon, rep, k_max)
        c["below_ceiling"] = bool(rep.energy <= ceiling)
        m = mesh.lumped_mass
        dev = rep.u - V / mesh.total_area
        c["is_constant"] = bool(math.sqrt(float(m @ (dev * dev)))
                                <= l2_threshold * const_norm)
        proj = _project_to_mesh(mesh, _field_barycenter(mesh, rep.u))
        c["nearest_vertex"] = proj.nearest_vertex

    card = topology_card(mesh.family_tag) if mesh.family_tag in _CARDS else None
    counts = {
        "distinct_total": len(classes),
        "distinct_below_c": sum(1 for c in classes if c["below_ceiling"]),
        "predicted_cat": card.cat if card else None,
        "predicted_cat_plus_1": card.cat + 1 if card else None,
        "predicted_p1": card.p1 if card else None,
        "predicted_2p1_minus_1": 2 * card.p1 - 1 if card else None,
    }
    tally = [c["representative"].morse_index for c in classes]
    return SweepResult(epsilon=epsilon, V=V, potential=well.name,
                       mesh_family=mesh.family_tag, classes=classes,
                       counts=counts, morse_tally=tally, runs=runs,
                       reliable=reliable, seeds=seeds, ceiling=ceiling)


def _attach_morse(mesh, well, epsilon, rep, k_max):
    k = k_max
    while True:
        idx, vals, nondeg = morse_index(mesh, well, epsilon, rep.u, k)
        # All computed modes negative means the index is only a lower
        # bound; widen the window until a nonnegative mode appears.
        if idx < len(vals) or k >= mesh.n_vertices - 2:
            break
        k = min(2 * k, mesh.n_vertices - 2)
    rep.morse_index = idx
    rep.eigenvalues = vals
    rep.nondegenerate = nondeg


def dedupe(points, mesh, l2_threshold=L2_THRESHOLD,
           energy_threshold=ENERGY_THRESHOLD):
    """Single-linkage classes under the joint field/energy metric.

    Two runs join the same class when their mass-weighted relative L2
    distance is at most l2_threshold and their relative energy gap is at
    most energy_threshold; classes are transitive closures of that
    relation. Representative = lowest-energy member.
    """
    points = list(points)
    n = len(points)
    if n == 0:
        return []
    m = mesh.lumped_mass
    U = np.stack([p.u for p in points])
    norms = np.sqrt(np.einsum("ij,j,ij->i", U, m, U))
    E = np.array([p.energy for p in points])

    rows, cols = [], []
    for i in range(n):
        du = U[i + 1:] - U[i]
        dl2 = np.sqrt(np.einsum("ij,j,ij->i", du, m, du))
        ref = np.maximum(norms[i + 1:], norms[i])
        de = np.abs(E[i + 1:] - E[i]) / np.maximum(np.abs(E[i + 1:]),
                                                   np.abs(E[i]) + 1e-300)
        close = (dl2 <= l2_threshold * ref) & (de <= energy_threshold)
        j = np.nonzero(close)[0] + i + 1
        rows.extend([i] * len(j))
        cols.extend(j)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=False)

    classes = []
    for comp in range(n_comp):
        idx = np.nonzero(labels == comp)[0]
        rep = points[idx[np.argmin(E[idx])]]
        classes.append({
            "representative": rep,
            "members": [points[i].base_point for i in idx],
            "size": int(idx.size),
        })
    classes.sort(key=lambda c: c["representative"].energy)
    return classes


def morse_report(result):
    """Morse-relation check at t = 1 against the topology card.

    With all representatives nondegenerate, the relation demands at
    least 2 P1 - 1 critical points and a nonnegative even residual
    2 Q(1) = count - (2 P1 - 1). Any degenerate representative switches
    the report to the multiplicity reading, which abstains from
    pass/fail.
    """
    required = result.counts["predicted_2p1_minus_1"]
    if required is None:
        raise ValueError("no topology card for this mesh family")
    count = result.counts["distinct_total"]
    degenerate = [not c["representative"].nondegenerate
                  for c in result.classes]
    if any(r.morse_index is None for r in
           (c["representative"] for c in result.classes)):
        raise ValueError("all representatives need Morse indices")
    if any(degenerate):
        return {"mode": "multiplicity", "count": count, "required": required,
                "q1": None, "passed": None,
                "note": "degenerate representative present; counts read "
                        "with multiplicity, no pass/fail"}
    passed = count >= required
    q1 = (count - required) / 2.0
    report = {"mode": "nondegenerate", "count": count, "required": required,
              "q1": q1, "passed": bool(passed and q1 >= 0.0)}
    if not passed:
        report["deficit"] = required - count
    return report
