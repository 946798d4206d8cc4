"""Distance distributions between surfaces and method-comparison reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .io import write_csv

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class DistanceDistribution:
    """Per-vertex distances (mm) with provenance."""
    values: np.ndarray
    source: str = ""
    target: str = ""
    kind: str = "distance"          # "fs", "streamline", "levelset", ...
    excluded: int = 0               # seeds dropped before building the record
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("distances must be finite and >= 0")

    @property
    def count(self):
        return int(self.values.size)

    def summary(self):
        v = self.values
        out = {"name": self.name, "kind": self.kind, "count": self.count, "excluded": self.excluded}
        if v.size:
            qs = np.quantile(v, QUANTILES)
            out.update(mean=float(v.mean()), std=float(v.std()), min=float(v.min()), max=float(v.max()),
                       **{f"q{int(round(100 * q)):02d}": float(x) for q, x in zip(QUANTILES, qs)})
            out["median"] = out["q50"]
        return out

    @property
    def name(self):
        return self.meta.get("name") or f"{self.kind}:{self.source}->{self.target}"


# ----------------------------------------------------------------------------- nearest vertices

def _sqdist_rows(a, B):
    d0 = B[:, 0] - a[0]
    d1 = B[:, 1] - a[1]
    d2 = B[:, 2] - a[2]
    return d0 * d0 + d1 * d1 + d2 * d2


def nearest_brute(A, B, chunk=512):
    """Nearest vertex of B for each point of A, lowest index on ties. Returns (index, squared distance)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    idx = np.empty(len(A), dtype=np.int64)
    d2 = np.empty(len(A))
    for s in range(0, len(A), chunk):
        a = A[s:s + chunk]
        D = ((B[None, :, 0] - a[:, None, 0]) * (B[None, :, 0] - a[:, None, 0])
             + (B[None, :, 1] - a[:, None, 1]) * (B[None, :, 1] - a[:, None, 1])
             + (B[None, :, 2] - a[:, None, 2]) * (B[None, :, 2] - a[:, None, 2]))
        j = np.argmin(D, axis=1)
        idx[s:s + chunk] = j
        d2[s:s + chunk] = D[np.arange(len(a)), j]
    return idx, d2


def nearest_tree(A, B, tree=None):
    """Same result as nearest_brute, using a k-d tree to shortlist candidates."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    tree = tree if tree is not None else cKDTree(B)
    d, _ = tree.query(A)
    idx = np.empty(len(A), dtype=np.int64)
    d2 = np.empty(len(A))
    radii = d * (1.0 + 1e-9) + 1e-12
    for n, (a, cand) in enumerate(zip(A, tree.query_ball_point(A, radii))):
        cand = np.sort(np.asarray(cand, dtype=np.int64))
        dd = _sqdist_rows(a, B[cand])
        j = int(np.argmin(dd))
        idx[n] = cand[j]
        d2[n] = dd[j]
    return idx, d2


def fs_distance(inner, outer, squared=False, method="tree", names=("inner", "outer")):
    """FreeSurfer-style distance from each inner vertex.

    d_i = (rho(r_i, f(r_i)) + rho(f(r_i), g(f(r_i)))) / 2 where f maps to the
    nearest outer vertex and g back to the nearest inner vertex. rho is the
    Euclidean distance, or its square when ``squared`` is set.
    """
    A = np.asarray(getattr(inner, "vertices", inner), dtype=float)
    B = np.asarray(getattr(outer, "vertices", outer), dtype=float)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("both surfaces need at least one vertex")
    near = {"tree": nearest_tree, "brute": nearest_brute}[method]
    f, d2_f = near(A, B)
    g, d2_g = near(B[f], A)
    rho = (lambda x: x) if squared else np.sqrt
    d = 0.5 * (rho(d2_f) + rho(d2_g))
    return DistanceDistribution(d, names[0], names[1], kind="fs",
                                meta={"squared": bool(squared), "method": method})


def thickness_distribution(values, flagged=None, source="inner", target="outer", kind="streamline"):
    """Wrap per-seed thickness values (or a LaminarSystem), dropping flagged seeds."""
    if hasattr(values, "thickness"):
        flagged = values.flagged if flagged is None else flagged
        values = values.thickness
    v = np.asarray(values, dtype=float).reshape(-1)
    keep = np.ones(v.size, dtype=bool) if flagged is None else ~np.asarray(flagged, dtype=bool)
    return DistanceDistribution(v[keep], source, target, kind=kind, excluded=int((~keep).sum()))


# ----------------------------------------------------------------------------- tables

def cdf(dist, n_bins=50, value_range=None):
    """Cumulative fraction of values <= each bin's upper edge; rows (bin_upper, cum_fraction)."""
    v = np.sort(dist.values if isinstance(dist, DistanceDistribution) else np.asarray(dist, dtype=float))
    if v.size == 0:
        raise ValueError("empty distribution")
    lo, hi = value_range if value_range is not None else (0.0, float(v[-1]))
    uppers = np.linspace(lo, hi, n_bins + 1)[1:]
    uppers[-1] = hi
    frac = np.searchsorted(v, uppers, side="right") / v.size
    return np.column_stack([uppers, frac])


def compare_report(dists):
    """Summaries, pairwise mean differences and the ``underestimates`` flag.

    The flag is set when the mean FreeSurfer-style distance is below the mean
    streamline thickness; it is None if either kind is missing.
    """
    dists = list(dists)
    summaries = [d.summary() for d in dists]
    pairs = []
    for i, a in enumerate(dists):
        for b in dists[i + 1:]:
            pairs.append({"a": a.name, "b": b.name,
                          "mean_difference": float(a.values.mean() - b.values.mean())})
    fs = [d for d in dists if d.kind == "fs"]
    st = [d for d in dists if d.kind == "streamline"]
    flag = None
    if fs and st:
        flag = bool(fs[0].values.mean() < st[0].values.mean())
    return {"distributions": summaries, "pairs": pairs, "underestimates": flag}


def write_distances(dist, path):
    write_csv(path, ("index", "distance"), [(i, float(x)) for i, x in enumerate(dist.values)])


def write_cdf(table, path):
    write_csv(path, ("bin_upper", "cum_fraction"), [(float(a), float(b)) for a, b in table])


def write_report(report, json_path, csv_path=None):
    Path(json_path).write_text(json.dumps(report, indent=2, sort_keys=True))
    if csv_path is not None:
        keys = ["name", "kind", "count", "excluded", "mean", "std", "median", "q05", "q95", "min", "max"]
        rows = [[s.get(k, "") for k in keys] for s in report["distributions"]]
        write_csv(csv_path, keys, rows)
