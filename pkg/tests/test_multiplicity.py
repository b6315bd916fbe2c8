import numpy as np
import pytest

import phaselab as pl
from phaselab.energy import CriticalPoint
from phaselab.multiplicity import subsample_seeds


def _point(u, energy, base_point=None, nondeg=True, index=0):
    return CriticalPoint(u=np.asarray(u, dtype=float), lam=0.0, energy=energy,
                         grad_norm=0.0, ps_norm=0.0, steps=1, epsilon=0.05,
                         V=0.4, converged=True, morse_index=index,
                         nondegenerate=nondeg, base_point=base_point)


def test_topology_cards():
    sphere = pl.topology_card("sphere")
    assert (sphere.cat, sphere.betti, sphere.p1) == (2, (1, 0, 1), 2)
    torus = pl.topology_card("torus")
    assert (torus.cat, torus.betti, torus.p1) == (3, (1, 2, 1), 4)
    g2 = pl.topology_card("genus_g", genus=2)
    assert (g2.cat, g2.betti, g2.p1) == (3, (1, 4, 1), 6)
    with pytest.raises(ValueError):
        pl.topology_card("external")
    with pytest.raises(ValueError):
        pl.topology_card("genus_g", genus=1)


def test_farthest_point_seeds(sphere3):
    seeds = pl.farthest_point_seeds(sphere3, 10)
    assert len(seeds) == 10
    assert len(set(seeds)) == 10
    # deterministic
    assert seeds == pl.farthest_point_seeds(sphere3, 10)
    # the second seed is far from the first
    d = sphere3.graph_distances(seeds[0])[0]
    assert d[seeds[1]] == d.max()


def test_subsample_seeds_deterministic(sphere3):
    a = subsample_seeds(sphere3, 12, seed=3)
    assert a == subsample_seeds(sphere3, 12, seed=3)
    assert len(set(a)) == 12


def test_dedupe_merges_duplicates(sphere3):
    n = sphere3.n_vertices
    u = np.linspace(0, 1, n)
    pts = [_point(u, 1.0, 1), _point(u * (1 + 1e-9), 1.0 + 1e-9, 2)]
    classes = pl.dedupe(pts, sphere3)
    assert len(classes) == 1
    assert classes[0]["size"] == 2
    assert set(classes[0]["members"]) == {1, 2}


def test_dedupe_separates_constant_from_cap(sphere3, well):
    V = np.pi / 2
    const = np.full(sphere3.n_vertices, V / sphere3.total_area)
    cap = pl.photograph(sphere3, well, 0.1, V, 0).field
    classes = pl.dedupe([_point(const, 0.5), _point(cap, 0.51)], sphere3)
    assert len(classes) == 2


def test_dedupe_empty(sphere3):
    assert pl.dedupe([], sphere3) == []


def test_dedupe_single_linkage_chains(sphere3):
    # a ~ b and b ~ c should merge all three even if a !~ c directly
    n = sphere3.n_vertices
    base = np.linspace(0, 1, n)
    a = _point(base, 1.0, 1)
    b = _point(base * 1.04, 1.01, 2)
    c = _point(base * 1.08, 1.02, 3)
    classes = pl.dedupe([a, b, c], sphere3, l2_threshold=0.045)
    assert len(classes) == 1


def _fake_sweep(family, n_classes, nondeg=True):
    mesh = pl.icosphere(1) if family != "torus" else pl.torus(2, 0.7, 8, 8)
    card = pl.topology_card(family)
    classes = []
    for k in range(n_classes):
        u = np.zeros(mesh.n_vertices)
        u[k] = 1.0
        classes.append({"representative": _point(u, 1.0 + k, k, nondeg=nondeg),
                        "members": [k], "size": 1, "below_ceiling": True,
                        "is_constant": False, "nearest_vertex": k})
    counts = {"distinct_total": n_classes,
              "distinct_below_c": n_classes,
              "predicted_cat": card.cat,
              "predicted_cat_plus_1": card.cat + 1,
              "predicted_p1": card.p1,
              "predicted_2p1_minus_1": 2 * card.p1 - 1}
    return pl.SweepResult(epsilon=0.05, V=0.4, potential="quartic",
                          mesh_family=family, classes=classes, counts=counts,
                          morse_tally=[0] * n_classes, runs=[],
                          reliable=True, seeds=list(range(n_classes)),
                          ceiling=1.0)


def test_morse_report_sphere_pass():
    rep = pl.morse_report(_fake_sweep("sphere", 3))
    assert rep == {"mode": "nondegenerate", "count": 3, "required": 3,
                   "q1": 0.0, "passed": True}


def test_morse_report_torus_deficit():
    rep = pl.morse_report(_fake_sweep("torus", 5))
    assert not rep["passed"]
    assert rep["deficit"] == 2


def test_morse_report_degenerate_abstains():
    rep = pl.morse_report(_fake_sweep("sphere", 3, nondeg=False))
    assert rep["mode"] == "multiplicity"
    assert rep["passed"] is None


def test_prediction_arithmetic():
    res = _fake_sweep("torus", 4)
    assert res.counts["predicted_cat_plus_1"] == res.counts["predicted_cat"] + 1
    assert res.counts["predicted_2p1_minus_1"] == \
        2 * res.counts["predicted_p1"] - 1


def test_sweep_small_sphere(sphere3, well):
    res = pl.sweep(sphere3, well, 0.1, np.pi / 2,
                   {"kind": "explicit", "vertices": [0, 300]},
                   k_max=6)
    assert res.reliable
    assert res.counts["distinct_total"] >= 2
    const_classes = [c for c in res.classes if c["is_constant"]]
    assert len(const_classes) == 1
    # caps at symmetric positions share their energy to high accuracy
    caps = [c["representative"].energy for c in res.classes
            if not c["is_constant"]]
    if len(caps) > 1:
        assert max(caps) / min(caps) < 1.01
    doc = res.to_json_dict()
    assert doc["counts"]["predicted_cat"] == 2
    rows = res.summary_rows()
    assert len(rows) == len(res.classes)


def test_sweep_count_monotone_in_seeds(sphere3, well):
    res1 = pl.sweep(sphere3, well, 0.1, np.pi / 2,
                    {"kind": "explicit", "vertices": [0]}, compute_morse=False)
    res2 = pl.sweep(sphere3, well, 0.1, np.pi / 2,
                    {"kind": "explicit", "vertices": [0, 300]},
                    compute_morse=False)
    assert res2.counts["distinct_total"] >= res1.counts["distinct_total"]


def test_sweep_deterministic(sphere3, well):
    kw = dict(k_max=4)
    r1 = pl.sweep(sphere3, well, 0.1, np.pi / 2,
                  {"kind": "explicit", "vertices": [0, 300]}, **kw)
    r2 = pl.sweep(sphere3, well, 0.1, np.pi / 2,
                  {"kind": "explicit", "vertices": [0, 300]}, **kw)
    assert [c["representative"].energy for c in r1.classes] == \
        [c["representative"].energy for c in r2.classes]
