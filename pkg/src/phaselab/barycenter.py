"""Backward map from fields to surface points, and locality diagnostics.

The barycenter of a field is its normalized first moment in embedding
coordinates; nearest-point projection carries it back onto the surface.
Composing photograph, barycenter, and projection should move no base
point farther than the injectivity radius; the audit here measures
that. Thresholding, concentration, and diameter diagnostics quantify
how sharply a low-energy field localizes.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import photography
from .mesh import level_length, superlevel_area

logger = logging.getLogger(__name__)

__all__ = ["ProjectionResult", "barycenter", "project_to_mesh",
           "homotopy_audit", "threshold_set", "concentration",
           "region_diameter"]


@dataclass
class ProjectionResult:
    euclidean_point: np.ndarray
    triangle: int
    bary_coords: np.ndarray
    mesh_point: np.ndarray
    distance_to_mesh: float
    nearest_vertex: int
    ambiguous: bool


def barycenter(mesh, u):
    """Mass-weighted average position sum(m u x) / sum(m u)."""
    u = np.asarray(u, dtype=float)
    w = mesh.lumped_mass * u
    denom = float(w.sum())
    if abs(denom) <= 1e-14 * mesh.total_area:
        raise ValueError("barycenter undefined: field integrates to zero")
    return (w @ mesh.vertex_positions) / denom


def _closest_points_on_triangles(p, a, b, c):
    """Closest point to p on each triangle (a, b, c), vectorized.

    Region classification on the barycentric plane; standard
    closest-point-on-triangle casework.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    n = len(a)
    s = np.zeros(n)
    t = np.zeros(n)
    done = np.zeros(n, dtype=bool)

    reg = (d1 <= 0) & (d2 <= 0)                      # vertex a
    done |= reg
    reg = ~done & (d3 >= 0) & (d4 <= d3)             # vertex b
    s[reg] = 1.0
    done |= reg
    reg = ~done & (d6 >= 0) & (d5 <= d6)             # vertex c
    t[reg] = 1.0
    done |= reg
    reg = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)  # edge ab
    with np.errstate(invalid="ignore", divide="ignore"):
        s_ab = d1 / (d1 - d3)
    s[reg] = s_ab[reg]
    done |= reg
    reg = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)  # edge ac
    with np.errstate(invalid="ignore", divide="ignore"):
        t_ac = d2 / (d2 - d6)
    t[reg] = t_ac[reg]
    done |= reg
    reg = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)  # edge bc
    with np.errstate(invalid="ignore", divide="ignore"):
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    s[reg] = 1.0 - w_bc[reg]
    t[reg] = w_bc[reg]
    done |= reg
    interior = ~done
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = 1.0 / (va + vb + vc)
    s[interior] = (vb * denom)[interior]
    t[interior] = (vc * denom)[interior]

    points = a + s[:, None] * ab + t[:, None] * ac
    bary = np.stack([1.0 - s - t, s, t], axis=1)
    return points, bary


def project_to_mesh(mesh, point, tie_tol=1e-9):
    """Exact nearest point on the mesh; ties broken by lowest triangle index.

    The result is flagged ambiguous when triangles at tied distance
    offer spatially distinct closest points (the query sits outside the
    tubular neighborhood where projection is single-valued); ties that
    share the closest point, as along every interior edge, are not
    ambiguous.
    """
    point = np.asarray(point, dtype=float)
    v = mesh.vertex_positions
    t = mesh.triangles
    p = np.broadcast_to(point, (len(t), 3))
    pts, bary = _closest_points_on_triangles(p, v[t[:, 0]], v[t[:, 1]], v[t[:, 2]])
    dist = np.linalg.norm(pts - point, axis=1)
    best = int(np.argmin(dist))
    tied = np.nonzero(dist <= dist[best] + tie_tol)[0]
    best = int(tied[0])
    ambiguous = bool(
        np.any(np.linalg.norm(pts[tied] - pts[best], axis=1) > tie_tol))
    nearest_vertex = int(t[best][np.argmax(bary[best])])
    return ProjectionResult(euclidean_point=point, triangle=best,
                            bary_coords=bary[best], mesh_point=pts[best],
                            distance_to_mesh=float(dist[best]),
                            nearest_vertex=nearest_vertex,
                            ambiguous=ambiguous)


def homotopy_audit(mesh, well, epsilon, V, base_points, **photo_kwargs):
    """Round-trip distance x0 -> photograph -> barycenter -> projection.

    Reports per-point geodesic distances from x0 to the projected
    barycenter, their max and mean, and the pass flag max <
    inj_estimate. Without an injectivity value the flag is None.
    """
    entries = []
    for x0 in base_points:
        x0 = int(x0)
        photo = photography.photograph(mesh, well, epsilon, V, x0,
                                       **photo_kwargs)
        proj = project_to_mesh(mesh, barycenter(mesh, photo.field))
        dist = mesh.geodesic_distance(x0)
        d = float(dist[mesh.triangles[proj.triangle]] @ proj.bary_coords)
        entries.append({"base_point": x0, "distance": d,
                        "tube_gap": proj.distance_to_mesh,
                        "ambiguous": proj.ambiguous})
    dists = [e["distance"] for e in entries]
    if mesh.inj_estimate is None:
        logger.warning("no injectivity value for this mesh; homotopy pass "
                       "flag disabled")
        passed = None
    else:
        passed = bool(max(dists) < mesh.inj_estimate)
    return {"entries": entries, "max": max(dists), "mean": float(np.mean(dists)),
            "inj_estimate": mesh.inj_estimate, "passed": passed}


def threshold_set(mesh, u, level):
    """Indicator of {u > level} with interpolated volume and perimeter."""
    u = np.asarray(u, dtype=float)
    if not u.min() < level < u.max():
        raise ValueError(f"level {level} outside the open range of the field")
    indicator = (u > level).astype(float)
    volume = superlevel_area(mesh, u, level)
    perimeter = level_length(mesh, u, level)
    return indicator, volume, perimeter


def concentration(mesh, u, r, chunk=256):
    """Best mass fraction of |u| captured by a ball of radius r/2.

    Maximizes over vertex centers using edge-graph distances, which
    overestimate slightly and so make the reported fraction
    conservative.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    u = np.asarray(u, dtype=float)
    weights = mesh.lumped_mass * np.abs(u)
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("concentration undefined: field integrates to zero")
    half = 0.5 * r
    best_val = -1.0
    best_vertex = -1
    n = mesh.n_vertices
    for start in range(0, n, chunk):
        sources = np.arange(start, min(start + chunk, n))
        D = mesh.graph_distances(sources, limit=half)
        captured = (D <= half) @ weights
        k = int(np.argmax(captured))
        if captured[k] > best_val:
            best_val = float(captured[k])
            best_vertex = int(sources[k])
    return best_vertex, best_val / total


def region_diameter(mesh, indicator):
    """Largest pairwise distance between support vertices of an indicator."""
    support = np.nonzero(np.asarray(indicator) != 0.0)[0]
    if support.size == 0:
        raise ValueError("region diameter undefined for empty support")
    if support.size == 1:
        return 0.0
    D = mesh.graph_distances(support)
    return float(D[:, support].max())
