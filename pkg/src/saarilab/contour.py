"""Level sets of the configurational measure on the shape chart.

Marching squares on a uniform lattice: the sign of ``mu - level`` is
evaluated at every node (in row blocks, so 4096^2 lattices fit in memory),
every lattice edge with a sign change gets one crossing point refined along
the edge, and the crossings are chained into polylines through the cells.
Saddle cells (four crossings) are split using the sign at the cell centre.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .central_config import ShapeChart
from .errors import EmptyContour

REFINE_TOL = 1e-10


@dataclass(frozen=True)
class Window:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"window: empty range {self}")


@dataclass
class CriticalPath:
    """Ordered polylines of ``(x, y)`` points on the level ``mu = level``."""

    level: float
    polylines: list = field(default_factory=list)
    refinement_tol: float = REFINE_TOL
    grid_n: int = 0
    window: Window | None = None

    @property
    def points(self) -> np.ndarray:
        if not self.polylines:
            return np.empty((0, 2))
        return np.vstack(self.polylines)

    @property
    def spacing(self) -> float:
        """Largest lattice spacing of the extraction grid."""
        w = self.window
        return max(w.x1 - w.x0, w.y1 - w.y0) / (self.grid_n - 1)

    def rows(self):
        """``(polyline_id, x, y)`` triples in emission order."""
        for pid, line in enumerate(self.polylines):
            for x, y in line:
                yield pid, float(x), float(y)


def _guarded(chart: ShapeChart, level, x, y):
    """``mu - level`` with the guard discs around the pinned vertices set to +inf."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g2 = chart.guard**2
    inside = (((x + 1.0) ** 2 + y * y) <= g2) | (((x - 1.0) ** 2 + y * y) <= g2)
    xs = np.where(inside, 0.0, x)
    ys = np.where(inside, 10.0, y)
    return np.where(inside, np.inf, chart.mu(xs, ys) - level)


def _refine(chart, level, ax, ay, bx, by, tol):
    """Crossing point on each segment ``a -> b`` (vectorised).

    Bisection in the edge parameter shrinks every bracket to a few ulps of
    the lattice spacing, then one Newton step on the analytic gradient
    polishes the point (kept only when it stays in the bracket and lowers
    the residual).
    """
    lo = np.zeros_like(ax)
    hi = np.ones_like(ax)
    flo = _guarded(chart, level, ax, ay)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = _guarded(chart, level, ax + mid * (bx - ax), ay + mid * (by - ay))
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    t = 0.5 * (lo + hi)
    px, py = ax + t * (bx - ax), ay + t * (by - ay)
    f = _guarded(chart, level, px, py)
    finite = np.isfinite(f)
    gx, gy = chart.gradient(np.where(finite, px, 0.0), np.where(finite, py, 10.0))
    slope = gx * (bx - ax) + gy * (by - ay)
    with np.errstate(divide="ignore", invalid="ignore"):
        tn = t - f / slope
    ok = finite & np.isfinite(tn) & (tn >= lo) & (tn <= hi)
    qx, qy = ax + tn * (bx - ax), ay + tn * (by - ay)
    fn = _guarded(chart, level, np.where(ok, qx, px), np.where(ok, qy, py))
    better = ok & (np.abs(fn) < np.abs(f))
    px = np.where(better, qx, px)
    py = np.where(better, qy, py)
    f = np.where(better, fn, f)
    good = np.abs(f) <= tol * level
    return px, py, good


def _sign_grid(chart, level, xs, ys, block_rows):
    pos = np.empty((ys.size, xs.size), dtype=bool)
    for r0 in range(0, ys.size, block_rows):
        yy = ys[r0 : r0 + block_rows, None]
        pos[r0 : r0 + block_rows] = _guarded(chart, level, xs[None, :], yy) > 0
    return pos


def critical_path_contour(chart: ShapeChart, level: float, window: Window, grid_n: int = 512,
                          tol: float = REFINE_TOL, block_rows: int = 256) -> CriticalPath:
    """Extract ``mu(x, y) = level`` inside ``window`` on a ``grid_n x grid_n`` lattice.

    Every emitted point satisfies ``|mu - level| <= tol * level``.

    Raises
    ------
    EmptyContour
        If no lattice edge crosses the level.
    """
    if level <= 0:
        raise ValueError(f"level must be positive, got {level}")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    n = int(grid_n)
    xs = np.linspace(window.x0, window.x1, n)
    ys = np.linspace(window.y0, window.y1, n)
    pos = _sign_grid(chart, level, xs, ys, block_rows)

    # edge ids: horizontal (i, j)-(i, j+1) -> i*(n-1)+j ; vertical (i, j)-(i+1, j) -> nh + i*n + j
    nh = n * (n - 1)
    hi_, hj_ = np.nonzero(pos[:, :-1] != pos[:, 1:])
    vi_, vj_ = np.nonzero(pos[:-1, :] != pos[1:, :])
    if hi_.size + vi_.size == 0:
        raise EmptyContour(f"no crossing of level {level:.17g} in {window}")

    ax = np.concatenate([xs[hj_], xs[vj_]])
    ay = np.concatenate([ys[hi_], ys[vi_]])
    bx = np.concatenate([xs[hj_ + 1], xs[vj_]])
    by = np.concatenate([ys[hi_], ys[vi_ + 1]])
    edge_ids = np.concatenate([hi_ * (n - 1) + hj_, nh + vi_ * n + vj_])
    px, py, good = _refine(chart, level, ax, ay, bx, by, tol)
    point_of = dict(zip(edge_ids.tolist(), range(edge_ids.size)))

    # cells with a crossing: corner bits bl=1, br=2, tr=4, tl=8
    case = (pos[:-1, :-1].astype(np.uint8) | (pos[:-1, 1:].astype(np.uint8) << 1)
            | (pos[1:, 1:].astype(np.uint8) << 2) | (pos[1:, :-1].astype(np.uint8) << 3))
    ci, cj = np.nonzero((case != 0) & (case != 15))
    cases = case[ci, cj]
    del case
    bottom = ci * (n - 1) + cj
    top = (ci + 1) * (n - 1) + cj
    left = nh + ci * n + cj
    right = nh + ci * n + cj + 1
    edges_of = np.stack([bottom, right, top, left], axis=1)
    # crossing flags per side follow from the corner bits
    bl, br, tr, tl = ((cases >> b) & 1 for b in range(4))
    cross = np.stack([bl != br, br != tr, tr != tl, tl != bl], axis=1)

    segments = []
    saddle = cross.all(axis=1)
    for row in np.nonzero(~saddle)[0]:
        e = edges_of[row][cross[row]]
        segments.append((int(e[0]), int(e[1])))
    if saddle.any():
        rows = np.nonzero(saddle)[0]
        cx = 0.5 * (xs[cj[rows]] + xs[cj[rows] + 1])
        cy = 0.5 * (ys[ci[rows]] + ys[ci[rows] + 1])
        centre_pos = _guarded(chart, level, cx, cy) > 0
        for row, cpos in zip(rows, centre_pos):
            b, r, t, lft = (int(e) for e in edges_of[row])
            if bool(cpos) == bool(bl[row]):
                # bl and tr joined through the centre: cut off br and tl
                segments += [(b, r), (t, lft)]
            else:
                segments += [(lft, b), (r, t)]

    polylines = _chain(segments, point_of, px, py, good)
    path = CriticalPath(level, polylines, tol, n, window)
    if not polylines:
        raise EmptyContour(f"no refined crossing of level {level:.17g} in {window}")
    return path


def _chain(segments, point_of, px, py, good):
    adj: dict = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    chains = []

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [e for e in adj[cur] if e != prev and e not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seen.add(cur)
            chain.append(cur)
        if len(chain) > 2 and start in adj[cur]:
            chain.append(start)  # closed loop
        return chain

    ends = sorted(e for e, nb in adj.items() if len(nb) == 1)
    for e in ends:
        if e not in seen:
            chains.append(walk(e))
    for e in sorted(adj):
        if e not in seen:
            chains.append(walk(e))

    polylines = []
    for chain in chains:
        idx = [point_of[e] for e in chain]
        idx = [i for i in idx if good[i]]
        if idx:
            polylines.append(np.column_stack([px[idx], py[idx]]))
    return polylines


def connected_components(points_list, radius: float) -> int:
    """Number of clusters when polylines whose points lie within ``radius`` merge."""
    from scipy.spatial import cKDTree

    if not points_list:
        return 0
    lengths = [len(p) for p in points_list]
    owner = np.repeat(np.arange(len(points_list)), lengths)
    pts = np.vstack(points_list)
    parent = list(range(len(points_list)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in cKDTree(pts).query_pairs(radius):
        a, b = find(owner[i]), find(owner[j])
        if a != b:
            parent[a] = b
    return len({find(i) for i in range(len(points_list))})
