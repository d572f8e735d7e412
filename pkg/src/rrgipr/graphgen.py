"""Random regular graphs and exhaustive enumeration of small regular graphs.

Random graphs come from the pairing (configuration) model with the
Steger-Wormald rule: at every step a pair of unmatched points is drawn
uniformly from the *suitable* pairs, i.e. pairs that create neither a loop
nor a repeated edge.  Drawing two points uniformly and rejecting unsuitable
pairs realises exactly that distribution.

Enumeration is orderly generation: vertices are added one at a time and a
partial graph is kept only if its labelling already maximises the column-wise
adjacency code.  Initial segments of a canonical graph are canonical, so every
isomorphism class is produced exactly once.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, ResourceLimitError

#: Identity of the bit generator used for graph sampling; recorded in run metadata.
RNG_ALGORITHM = "numpy.random.PCG64"

MAX_RESTARTS = 100
MAX_CONNECT_ATTEMPTS = 1000


@dataclass(frozen=True)
class GraphSpec:
    n: int
    z: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.z < 1:
            raise InvalidSpecError(f"n and z must be positive (n={self.n}, z={self.z})")
        if (self.n * self.z) % 2:
            raise InvalidSpecError(f"n*z must be even (n={self.n}, z={self.z})")
        if self.z >= self.n:
            raise InvalidSpecError(f"degree must be below vertex count (n={self.n}, z={self.z})")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class RegularGraph:
    """Simple undirected z-regular graph stored as sorted neighbour lists."""

    n: int
    z: int
    neighbors: tuple[tuple[int, ...], ...]
    seed: int | None = None
    retries: int = 0
    restarts: int = 0

    @classmethod
    def from_edges(cls, n, z, edges, **meta) -> RegularGraph:
        nbrs = [[] for _ in range(n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return cls(n, z, tuple(tuple(sorted(a)) for a in nbrs), **meta)

    def edges(self):
        return [(u, v) for u in range(self.n) for v in self.neighbors[u] if u < v]

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, nb in enumerate(self.neighbors):
            a[u, list(nb)] = 1.0
        return a

    def validate(self):
        """Raise InvalidSpecError unless every RegularGraph invariant holds."""
        if len(self.neighbors) != self.n:
            raise InvalidSpecError("neighbor list count differs from n")
        for u, nb in enumerate(self.neighbors):
            if len(nb) != self.z:
                raise InvalidSpecError(f"vertex {u} has degree {len(nb)}, expected {self.z}")
            if u in nb:
                raise InvalidSpecError(f"self-loop at vertex {u}")
            if len(set(nb)) != len(nb):
                raise InvalidSpecError(f"repeated neighbor at vertex {u}")
            if list(nb) != sorted(nb):
                raise InvalidSpecError(f"neighbors of vertex {u} are not sorted")
            for v in nb:
                if not 0 <= v < self.n or u not in self.neighbors[v]:
                    raise InvalidSpecError(f"edge {u}-{v} is not symmetric")
        return self

    def relabel(self, perm) -> RegularGraph:
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return RegularGraph.from_edges(
            self.n, self.z, [(perm[u], perm[v]) for u, v in self.edges()]
        )

    def to_text(self) -> str:
        seed = 0 if self.seed is None else self.seed
        lines = [f"{self.n} {self.z} {seed}"]
        lines += [" ".join(map(str, nb)) for nb in self.neighbors]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> RegularGraph:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n, z, seed = (int(t) for t in lines[0].split())
        nbrs = tuple(tuple(sorted(int(t) for t in ln.split())) for ln in lines[1 : n + 1])
        return cls(n, z, nbrs, seed=seed).validate()


def disjoint_union(*graphs: RegularGraph) -> RegularGraph:
    z = graphs[0].z
    if any(g.z != z for g in graphs):
        raise InvalidSpecError("disjoint union needs a common degree")
    nbrs, offset = [], 0
    for g in graphs:
        nbrs += [tuple(v + offset for v in nb) for nb in g.neighbors]
        offset += g.n
    return RegularGraph(offset, z, tuple(nbrs))


def complete_graph(n: int) -> RegularGraph:
    return RegularGraph(n, n - 1, tuple(tuple(v for v in range(n) if v != u) for u in range(n)))


def cycle_graph(n: int) -> RegularGraph:
    return RegularGraph.from_edges(n, 2, [(i, (i + 1) % n) for i in range(n)])


# --------------------------------------------------------------------------
# random generation
# --------------------------------------------------------------------------


class _Uniforms:
    """Buffered uniform draws; one numpy call per block instead of per pair."""

    def __init__(self, rng, block=4096):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block)
        self.pos = 0

    def index(self, size):
        if self.pos == self.block:
            self.buf = self.rng.random(self.block)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return int(u * size)


def _has_suitable_pair(points, nbrs):
    verts = sorted(set(points))
    for a, b in itertools.combinations(verts, 2):
        if b not in nbrs[a]:
            return True
    return False


def _pairing_attempt(n, z, draw):
    """One pass of the Steger-Wormald pairing; None if it stalls."""
    points = [v for v in range(n) for _ in range(z)]
    nbrs = [set() for _ in range(n)]
    edges = []
    rejected = 0
    while points:
        size = len(points)
        i = draw.index(size)
        j = draw.index(size - 1)
        if j >= i:
            j += 1
        u, v = points[i], points[j]
        if u != v and v not in nbrs[u]:
            nbrs[u].add(v)
            nbrs[v].add(u)
            edges.append((u, v))
            for k in sorted((i, j), reverse=True):
                points[k] = points[-1]
                points.pop()
            rejected = 0
            continue
        rejected += 1
        if rejected > 2 * size + 64:
            if not _has_suitable_pair(points, nbrs):
                return None
            rejected = 0
    return edges


def generate_regular(spec: GraphSpec) -> RegularGraph:
    """Sample a connected simple z-regular graph.

    Deterministic in ``spec.seed``.  A stalled pairing is restarted (at most
    ``MAX_RESTARTS`` times per sample); a disconnected sample is discarded and
    the same RNG stream continues.  The returned graph records how many
    disconnected samples were rejected (``retries``) and how many stalls
    occurred (``restarts``).
    """
    n, z = spec.n, spec.z
    if z == n - 1:
        return RegularGraph(n, z, complete_graph(n).neighbors, seed=spec.seed)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    draw = _Uniforms(rng)
    restarts = 0
    for attempt in range(MAX_CONNECT_ATTEMPTS):
        stalls = 0
        edges = _pairing_attempt(n, z, draw)
        while edges is None:
            stalls += 1
            if stalls > MAX_RESTARTS:
                raise ResourceLimitError(
                    f"pairing stalled more than {MAX_RESTARTS} times for n={n}, z={z}"
                )
            edges = _pairing_attempt(n, z, draw)
        restarts += stalls
        g = RegularGraph.from_edges(n, z, edges, seed=spec.seed, retries=attempt, restarts=restarts)
        if connected_components(g) == 1:
            return g
    raise ResourceLimitError(
        f"no connected sample after {MAX_CONNECT_ATTEMPTS} attempts for n={n}, z={z}"
    )


def connected_components(g: RegularGraph) -> int:
    seen = [False] * g.n
    count = 0
    for root in range(g.n):
        if seen[root]:
            continue
        count += 1
        seen[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return count


# --------------------------------------------------------------------------
# canonical form and orderly enumeration
# --------------------------------------------------------------------------
#
# Code of a labelled graph on m vertices: for column k the integer
# sum(2**(m-1-i) for i < k if i ~ k); columns compared in order k = 0..m-1.
# The canonical labelling maximises this sequence lexicographically, which is
# the minimum of the same bit string with edges and non-edges exchanged.


def _column_targets(nbrs, m):
    top = m - 1
    return [sum(1 << (top - i) for i in nbrs[k] if i < k) for k in range(m)]


def _is_canonical(nbrs, m):
    """True if the identity labelling attains the maximal column code."""
    target = _column_targets(nbrs, m)
    top = m - 1
    colval = [0] * m
    used = [False] * m

    def search(k):
        if k == m:
            return True
        t = target[k]
        ties = []
        for v in range(m):
            if not used[v]:
                c = colval[v]
                if c > t:
                    return False
                if c == t:
                    ties.append(v)
        bit = 1 << (top - k)
        for v in ties:
            used[v] = True
            for w in nbrs[v]:
                colval[w] |= bit
            ok = search(k + 1)
            for w in nbrs[v]:
                colval[w] ^= bit
            used[v] = False
            if not ok:
                return False
        return True

    return search(0)


def canonical_form(g: RegularGraph) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Return ``(code, order)`` where ``code`` is the maximal column code.

    ``order[k]`` is the original vertex placed at position ``k``.  The code is
    an isomorphism invariant: relabelled copies of ``g`` return the same code.
    """
    m = g.n
    nbrs = g.neighbors
    top = m - 1
    colval = [0] * m
    used = [False] * m
    best: list = [None, None]
    current: list[int] = []
    prefix: list[int] = []

    def search(k):
        if k == m:
            if best[0] is None or prefix > best[0]:
                best[0] = list(prefix)
                best[1] = list(current)
            return
        free = [v for v in range(m) if not used[v]]
        hi = max(colval[v] for v in free)
        if best[0] is not None:
            # the prefix so far equals best[0][:k]; a smaller column loses
            if hi < best[0][k]:
                return
            if hi > best[0][k]:
                best[0] = None
        bit = 1 << (top - k)
        for v in free:
            if colval[v] != hi:
                continue
            used[v] = True
            current.append(v)
            prefix.append(hi)
            for w in nbrs[v]:
                colval[w] |= bit
            search(k + 1)
            for w in nbrs[v]:
                colval[w] ^= bit
            prefix.pop()
            current.pop()
            used[v] = False

    search(0)
    return tuple(best[0]), tuple(best[1])


def canonical_relabel(g: RegularGraph) -> RegularGraph:
    _, order = canonical_form(g)
    perm = [0] * g.n
    for pos, v in enumerate(order):
        perm[v] = pos
    return g.relabel(perm)


@dataclass
class EnumerationResult:
    n: int
    z: int
    graphs: list[RegularGraph] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.graphs)


def enumerate_connected_regular(n: int, z: int, max_vertices: int = 16) -> EnumerationResult:
    """All connected z-regular graphs on n vertices, one per isomorphism class.

    Vertices are added in breadth-first order: the new vertex's neighbour set
    must contain the lowest unsaturated vertex (every vertex before it is
    already saturated and can never gain an edge).  Each partial graph is
    tested for canonicity before it is extended.
    """
    GraphSpec(n, z)
    if n > max_vertices:
        raise ResourceLimitError(
            f"enumeration budget is max_vertices={max_vertices}; n={n} exceeds it"
        )
    nbrs: list[list[int]] = [[] for _ in range(n)]
    found: list[RegularGraph] = []

    def extend(j, lowest_open):
        if j == n:
            found.append(RegularGraph(n, z, tuple(tuple(sorted(a)) for a in nbrs)))
            return
        open_ = [i for i in range(lowest_open, j) if len(nbrs[i]) < z]
        if not open_:
            return
        first = open_[0]
        rest_count = n - 1 - j
        for size in range(1, z + 1):
            for others in itertools.combinations(open_[1:], size - 1):
                chosen = (first,) + others
                for i in chosen:
                    nbrs[i].append(j)
                nbrs[j] = list(chosen)
                deficit = sum(z - len(nbrs[i]) for i in range(j + 1))
                if rest_count == 0:
                    feasible = deficit == 0
                else:
                    free = rest_count * z - deficit
                    feasible = 1 <= deficit and free >= 0 and free % 2 == 0
                if feasible and _is_canonical(nbrs, j + 1):
                    extend(j + 1, first)
                for i in chosen:
                    nbrs[i].pop()
                nbrs[j] = []

    if n == 1:
        return EnumerationResult(n, z, [])
    extend(1, 0)
    return EnumerationResult(n, z, found)

