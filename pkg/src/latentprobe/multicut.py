"""Minimum-cost multicut (correlation clustering) over complete graphs.

Edge costs come from pairwise squared distances through a logit mapping:
the cut probability is sigma((d - theta) / temperature), which turns into
the real cost w_e = (theta - d) / temperature.  Similar pairs (d < theta)
get positive, attractive weight; dissimilar pairs get negative weight and
are cheap to cut.  A clustering pays the sum of w_e over edges it cuts,
and the solvers minimize that objective.

Solving is heuristic: greedy additive edge contraction builds an initial
decomposition, then local single-node moves refine it.  Costs are stored
densely in condensed upper-triangle order (n(n-1)/2 entries), which caps
the practical per-solve size; `cluster_parallel` splits larger sets into
disjoint chunks, solves each independently, and merges chunk clusters by
clustering their centroids with the same parameters.
"""

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import squareform

from .clustermetrics import cluster_accuracy, purity, singleton_fraction
from .featureset import FeatureSet, split_disjoint, squared_distances
from .kmeans import Clustering

DEFAULT_KL_PASSES = 10
DENSE_NODE_CAP = 4096  # practical per-chunk size for one dense cost graph
_EPS = 1e-12


@dataclass(frozen=True)
class CostGraph:
    """Complete weighted graph: condensed edge costs over all n(n-1)/2 pairs."""

    n: int
    costs: np.ndarray
    theta: float = 0.0
    temperature: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2 nodes, got {self.n}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        costs = np.array(self.costs, dtype=np.float64, copy=True)
        expected = self.n * (self.n - 1) // 2
        if costs.shape != (expected,):
            raise ValueError(f"expected {expected} edge costs for n={self.n}, got {costs.shape}")
        if not np.all(np.isfinite(costs)):
            raise ValueError("edge costs must be finite")
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)

    @property
    def edge_count(self) -> int:
        return self.costs.shape[0]


@dataclass(frozen=True)
class EdgeLabeling:
    """Binary label per edge, condensed order; 1 = cut, 0 = join."""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=np.uint8, copy=True)
        if y.ndim != 1 or not np.all((y == 0) | (y == 1)):
            raise ValueError("edge labels must be a 1-D 0/1 array")
        y.flags.writeable = False
        object.__setattr__(self, "y", y)

    @staticmethod
    def from_clustering(c: Clustering) -> "EdgeLabeling":
        iu, ju = np.triu_indices(c.n, k=1)
        a = c.assignment
        return EdgeLabeling((a[iu] != a[ju]).astype(np.uint8))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    cluster_accuracy: float
    purity: float
    cluster_count: int
    singleton_count: int


@dataclass(frozen=True)
class SweepTable:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        thresholds = [r.threshold for r in rows]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("sweep thresholds must be strictly increasing")
        object.__setattr__(self, "rows", rows)


def build_cost_graph(fs: FeatureSet, theta: float, temperature: float) -> CostGraph:
    """Map pairwise squared distances to edge costs w_e = (theta - d) / temperature."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    d = squared_distances(fs)
    return CostGraph(n=fs.n, costs=(theta - d) / temperature, theta=theta, temperature=temperature)


def estimate_temperature(fs: FeatureSet, seed: int = 0, max_pairs: int = 100_000) -> float:
    """Empirical std of a pairwise-distance sample; the default temperature."""
    total = fs.n * (fs.n - 1) // 2
    if total <= max_pairs:
        d = squared_distances(fs)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        i = rng.integers(0, fs.n, size=max_pairs)
        j = rng.integers(0, fs.n, size=max_pairs)
        keep = i != j
        x = fs.data.astype(np.float64)
        d = ((x[i[keep]] - x[j[keep]]) ** 2).sum(axis=1)
    std = float(d.std())
    if std <= 0:
        raise ValueError("distance sample has zero spread; temperature undefined")
    return std


def objective(g: CostGraph, c: Clustering) -> float:
    """Total cost of edges cut by the clustering (endpoints in different clusters)."""
    if c.n != g.n:
        raise ValueError(f"clustering covers {c.n} nodes, graph has {g.n}")
    iu, ju = np.triu_indices(g.n, k=1)
    cut = c.assignment[iu] != c.assignment[ju]
    return float(g.costs[cut].sum())


def is_valid_decomposition(g: CostGraph, labeling: EdgeLabeling) -> bool:
    """True iff the edge labeling is induced by some partition of the nodes.

    Checked via connected components of the join edges: no cut edge may
    connect two nodes of the same join component (on a complete graph this
    is equivalent to the no-lone-cut-in-a-cycle condition).
    """
    if labeling.y.shape[0] != g.edge_count:
        raise ValueError(f"labeling has {labeling.y.shape[0]} edges, graph has {g.edge_count}")
    parent = list(range(g.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    iu, ju = np.triu_indices(g.n, k=1)
    y = labeling.y
    for i, j in zip(iu[y == 0].tolist(), ju[y == 0].tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    for i, j in zip(iu[y == 1].tolist(), ju[y == 1].tolist()):
        if find(i) == find(j):
            return False
    return True


def solve_gaec(g: CostGraph) -> Clustering:
    """Greedy additive edge contraction from singletons.

    Repeatedly contracts the cluster pair with the largest positive
    inter-cluster weight (weights add up under contraction) and stops when
    no positive weight remains.  Deterministic: ties break on the lowest
    cluster-id pair.
    """
    n = g.n
    w = g.costs
    adj: list[dict] = [dict() for _ in range(n)]
    iu, ju = np.triu_indices(n, k=1)
    for i, j, we in zip(iu.tolist(), ju.tolist(), w.tolist()):
        adj[i][j] = we
        adj[j][i] = we
    heap = [(-we, i, j) for (i, j), we in zip(zip(iu.tolist(), ju.tolist()), w.tolist()) if we > 0]
    heapq.heapify(heap)
    alive = [True] * n
    members = [[i] for i in range(n)]
    while heap:
        neg, a, b = heapq.heappop(heap)
        weight = -neg
        if weight <= 0:
            break
        if not (alive[a] and alive[b]):
            continue
        if adj[a].get(b) != weight:
            continue  # stale entry; weight changed since push
        # Contract b into a.
        del adj[a][b]
        del adj[b][a]
        for t, wt in adj[b].items():
            merged = adj[a].get(t, 0.0) + wt
            adj[a][t] = merged
            adj[t][a] = merged
            del adj[t][b]
            if merged > 0:
                heapq.heappush(heap, (-merged, min(a, t), max(a, t)))
        adj[b].clear()
        alive[b] = False
        members[a].extend(members[b])
        members[b] = []
    assignment = np.empty(n, dtype=np.int64)
    for root in range(n):
        if alive[root]:
            assignment[members[root]] = root
    return Clustering.from_labels(assignment)


def _attachment(w: np.ndarray, labels: np.ndarray, width: int) -> np.ndarray:
    """n x width matrix of each node's total weight into every cluster."""
    onehot = np.zeros((labels.shape[0], width))
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    return w @ onehot


def _best_moves(a: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per node: best move target (-1 = new singleton) and its objective delta.

    Moving v out of its cluster cuts a[v, cur]; joining t un-cuts a[v, t],
    so the delta is a[v, cur] - a[v, t], with t = -1 standing for a fresh
    singleton (attachment zero).
    """
    n = a.shape[0]
    rows = np.arange(n)
    base = a[rows, labels]
    masked = a.copy()
    masked[rows, labels] = -np.inf
    best = np.argmax(masked, axis=1)
    best_attach = masked[rows, best]
    target = np.where(best_attach > _EPS, best, -1)
    return target, base - np.maximum(best_attach, 0.0)


_KL_MULTI_START_MAX = 64  # escape chains from every node only on small graphs


def refine_kl(g: CostGraph, c: Clustering, max_passes: int = DEFAULT_KL_PASSES) -> Clustering:
    """Local refinement by single-node moves between clusters or to a new singleton.

    Each pass either sweeps all nodes applying strictly improving moves, or,
    once no single move improves, builds tentative Kernighan-Lin chains in
    which every node moves at most once (each step takes the currently
    cheapest move, even uphill) and commits the chain prefix with the lowest
    cumulative delta if that delta is negative.  On graphs with up to 64
    nodes a chain is tried from every possible first mover; beyond that only
    the globally cheapest chain is built.  The objective never increases,
    and the routine stops after `max_passes` passes or when neither phase
    changes anything.
    """
    if c.n != g.n:
        raise ValueError(f"clustering covers {c.n} nodes, graph has {g.n}")
    if max_passes < 1:
        raise ValueError(f"max_passes must be >= 1, got {max_passes}")
    n = g.n
    w = squareform(g.costs)
    labels = c.assignment.copy()
    for _ in range(max_passes):
        width = int(labels.max()) + 1 + n  # room for one new singleton per step
        a = _attachment(w, labels, width)
        next_id = int(labels.max()) + 1
        moved = False
        for v in range(n):
            target, delta = _best_moves(a[v : v + 1], labels[v : v + 1])
            if delta[0] < -_EPS:
                dest = next_id if target[0] == -1 else int(target[0])
                if dest == next_id:
                    next_id += 1
                a[:, labels[v]] -= w[:, v]
                a[:, dest] += w[:, v]
                labels[v] = dest
                moved = True
        if not moved:
            starts = range(n) if n <= _KL_MULTI_START_MAX else (None,)
            best_cum, best_trail = 0.0, []
            for start in starts:
                cum, trail = _kl_sequence(w, labels, a, next_id, start)
                if cum < best_cum - _EPS:
                    best_cum, best_trail = cum, trail
            if best_trail:
                for v, dest in best_trail:
                    labels[v] = dest
                labels = Clustering.from_labels(labels).assignment.copy()
                moved = True
        if not moved:
            break
    return Clustering.from_labels(labels)


def _kl_sequence(w, labels, a, next_id, forced_start):
    """One tentative chain of single-node moves, each node moving at most once.

    The first mover is `forced_start` when given, otherwise the node with the
    globally cheapest move; subsequent steps always take the cheapest move
    among the nodes that have not moved yet.  Returns the cumulative delta of
    the best prefix and its (node, destination) moves; positive-cum chains
    return an empty trail.
    """
    n = labels.shape[0]
    tentative = labels.copy()
    a = a.copy()
    avail = np.ones(n, dtype=bool)
    cum = 0.0
    best_cum = 0.0
    best_step = -1
    trail = []
    for step in range(n):
        if step == 0 and forced_start is not None:
            idx = np.array([forced_start])
        else:
            idx = np.flatnonzero(avail)
        target, delta = _best_moves(a[idx], tentative[idx])
        pick = int(np.argmin(delta))
        v = int(idx[pick])
        dest = next_id if target[pick] == -1 else int(target[pick])
        if dest == next_id:
            next_id += 1
        a[:, tentative[v]] -= w[:, v]
        a[:, dest] += w[:, v]
        tentative[v] = dest
        avail[v] = False
        cum += float(delta[pick])
        trail.append((v, dest))
        if cum < best_cum - _EPS:
            best_cum = cum
            best_step = len(trail) - 1
    if best_step < 0:
        return 0.0, []
    return best_cum, trail[: best_step + 1]


def solve(g: CostGraph, max_passes: int = DEFAULT_KL_PASSES) -> Clustering:
    """Full heuristic pipeline: greedy contraction then local refinement."""
    return refine_kl(g, solve_gaec(g), max_passes=max_passes)


def threshold_sweep(
    fs: FeatureSet, grid, temperature: float
) -> tuple[float, SweepTable]:
    """Solve once per threshold and score against the true labels.

    Returns the threshold with the highest cluster accuracy (ties toward
    the smaller threshold) and the full sweep table.
    """
    grid = [float(t) for t in grid]
    if not grid:
        raise ValueError("threshold grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be strictly increasing")
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    d = squared_distances(fs)
    rows = []
    for theta in grid:
        g = CostGraph(n=fs.n, costs=(theta - d) / temperature, theta=theta, temperature=temperature)
        pred = solve(g)
        sizes = np.bincount(pred.assignment, minlength=pred.cluster_count)
        rows.append(
            SweepRow(
                threshold=theta,
                cluster_accuracy=cluster_accuracy(pred, fs.labels),
                purity=purity(pred, fs.labels),
                cluster_count=pred.cluster_count,
                singleton_count=int(np.sum(sizes == 1)),
            )
        )
    best = max(range(len(rows)), key=lambda i: (rows[i].cluster_accuracy, -rows[i].threshold))
    return rows[best].threshold, SweepTable(rows=tuple(rows))


def cluster_parallel(
    fs: FeatureSet,
    chunks: int,
    theta: float,
    temperature: float,
    seed: int,
    jobs: int = 1,
    max_passes: int = DEFAULT_KL_PASSES,
) -> Clustering:
    """Chunked bottom-up multicut for sets too large for one dense graph.

    The rows are split into disjoint balanced chunks and each chunk is
    solved independently (concurrently when jobs > 1; results are keyed by
    chunk index so the interleaving cannot change the output).  Chunk-level
    clusters are then represented by their centroids, the centroids are
    clustered with the same (theta, temperature), and samples inherit the
    centroid clustering.  chunks=1 is exactly the direct solve.
    """
    if chunks < 1:
        raise ValueError(f"chunks must be >= 1, got {chunks}")
    if chunks == 1:
        return solve(build_cost_graph(fs, theta, temperature), max_passes=max_passes)
    pieces = split_disjoint(fs, chunks, seed)

    def solve_piece(piece):
        return solve(build_cost_graph(piece.features, theta, temperature), max_passes=max_passes)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            local = list(pool.map(solve_piece, pieces))
    else:
        local = [solve_piece(p) for p in pieces]

    centroids = []
    centroid_of = []  # per chunk: local cluster id -> centroid row
    for piece, pred in zip(pieces, local):
        x = piece.features.data.astype(np.float64)
        start = len(centroids)
        for cid in range(pred.cluster_count):
            centroids.append(x[pred.assignment == cid].mean(axis=0))
        centroid_of.append(start)
    centroids = np.asarray(centroids)
    if centroids.shape[0] == 1:
        merged = np.zeros(1, dtype=np.int64)
    else:
        meta = FeatureSet(centroids, np.zeros(centroids.shape[0], dtype=np.int64), 1)
        merged = solve(build_cost_graph(meta, theta, temperature), max_passes=max_passes).assignment

    assignment = np.empty(fs.n, dtype=np.int64)
    for piece, pred, start in zip(pieces, local, centroid_of):
        assignment[piece.indices] = merged[start + pred.assignment]
    return Clustering.from_labels(assignment)
