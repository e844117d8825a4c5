"""Graph states with pending local Cliffords, Pauli measurements and fusion.

A state is a simple graph plus a per-vertex local Clifford tag, so the
physical state is ``prod_v C_v |G>``.  Tags are kept modulo Pauli operators
and stored as the permutation of Pauli axes they induce: ``tag[j]`` is the
axis that graph-frame Pauli ``j`` becomes under ``C_v``.  Pauli byproducts
are dropped throughout; they never change graph connectivity.

Measurements follow the standard graph-state rules for the ``+`` outcome:
Z deletes the vertex, Y deletes it after a local complementation, and X
uses a special neighbour and three local complementations.  On a clique the
X rule reduces to deleting the vertex and putting a Hadamard-type tag on
the special neighbour.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field

from .lattice.layout import TOPOLOGIES, FusionLayout, Microcluster, relay_graph_from_layout

AXES = "XYZ"
IDENTITY = "XYZ"
TAG_NAMES = {
    "XYZ": "none",
    "ZYX": "hadamard",
    "YXZ": "phase",
    "XZY": "sqrt_x",
    "ZXY": "cycle",
    "YZX": "cycle_inverse",
}
NAMED_TAGS = {v: k for k, v in TAG_NAMES.items()}

# tag multipliers for a local complementation at v (on v and on its neighbours)
_LC_SELF = "XZY"
_LC_NEIGHBOUR = "YXZ"
_X_SPECIAL = "ZYX"


class GraphStateError(ValueError):
    pass


def compose(outer: str, inner: str) -> str:
    """Tag of ``outer`` applied after ``inner`` (as axis permutations)."""
    return "".join(outer[AXES.index(inner[j])] for j in range(3))


def _frame_axis(tag: str, physical: str) -> str:
    """Graph-frame axis measured when the physical axis ``physical`` is measured."""
    return AXES[tag.index(physical)]


def _inverse(tag: str) -> str:
    return "".join(AXES[tag.index(a)] for a in AXES)


def _mirror(tag: str) -> str:
    """Tag of H C^T H for C with tag ``tag``."""
    return compose(_X_SPECIAL, compose(_inverse(tag), _X_SPECIAL))


def _tag_code(tag: str) -> str:
    tag = NAMED_TAGS.get(tag, tag)
    if sorted(tag) != list(AXES):
        raise GraphStateError(f"unknown tag {tag!r}")
    return tag


@dataclass(frozen=True, eq=False)
class GraphState:
    adj: dict[int, frozenset[int]]
    tags: dict[int, str]

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, vertices: Iterable[int], edges: Iterable[tuple[int, int]] = ()) -> GraphState:
        verts = [int(v) for v in vertices]
        if len(set(verts)) != len(verts):
            raise GraphStateError("duplicate vertex ids")
        adj: dict[int, set[int]] = {v: set() for v in verts}
        for a, b in edges:
            a, b = int(a), int(b)
            if a not in adj or b not in adj:
                raise GraphStateError(f"edge ({a}, {b}) leaves the vertex set")
            if a == b:
                raise GraphStateError(f"self-loop at {a}")
            if b in adj[a]:
                raise GraphStateError(f"duplicate edge ({a}, {b})")
            adj[a].add(b)
            adj[b].add(a)
        return cls({v: frozenset(n) for v, n in adj.items()}, {})

    def _replace(self, adj=None, tags=None) -> GraphState:
        adj = self.adj if adj is None else adj
        tags = dict(self.tags if tags is None else tags)
        tags = {v: t for v, t in tags.items() if v in adj and t != IDENTITY}
        return GraphState(adj, tags)

    # -- queries ------------------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return sorted(self.adj)

    def __contains__(self, v: int) -> bool:
        return v in self.adj

    def __len__(self) -> int:
        return len(self.adj)

    def neighbours(self, v: int) -> frozenset[int]:
        self._need(v)
        return self.adj[v]

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a, ns in self.adj.items() for b in ns if a < b)

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj.get(a, ())

    def tag(self, v: int) -> str:
        self._need(v)
        return self.tags.get(v, IDENTITY)

    def tag_name(self, v: int) -> str:
        return TAG_NAMES[self.tag(v)]

    def _need(self, v: int) -> None:
        if v not in self.adj:
            raise GraphStateError(f"vertex {v} is not in the graph")

    def same_graph(self, other: GraphState) -> bool:
        return self.adj == other.adj

    def components(self) -> list[tuple[int, ...]]:
        seen: set[int] = set()
        out = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = []
            todo = [v]
            seen.add(v)
            while todo:
                u = todo.pop()
                comp.append(u)
                for w in self.adj[u]:
                    if w not in seen:
                        seen.add(w)
                        todo.append(w)
            out.append(tuple(sorted(comp)))
        return out

    # -- elementary rewrites -------------------------------------------------

    def _toggled(self, pairs: Iterable[tuple[int, int]]) -> dict[int, frozenset[int]]:
        adj = {v: set(n) for v, n in self.adj.items()}
        for a, b in pairs:
            if b in adj[a]:
                adj[a].discard(b)
                adj[b].discard(a)
            else:
                adj[a].add(b)
                adj[b].add(a)
        return {v: frozenset(n) for v, n in adj.items()}

    def local_complement(self, v: int) -> GraphState:
        """Toggle every edge among the neighbours of ``v`` (graph only)."""
        ns = sorted(self.neighbours(v))
        return self._replace(adj=self._toggled(itertools.combinations(ns, 2)))

    def lc_equivalent(self, v: int) -> GraphState:
        """Local complementation at ``v`` with tags updated so the physical state is unchanged."""
        g = self.local_complement(v)
        tags = dict(g.tags)
        tags[v] = compose(self.tag(v), _LC_SELF)
        for w in self.adj[v]:
            tags[w] = compose(self.tag(w), _LC_NEIGHBOUR)
        return self._replace(adj=g.adj, tags=tags)

    def apply_clifford(self, v: int, tag: str) -> GraphState:
        """Apply a physical local Clifford (given by tag or tag name) to ``v``."""
        self._need(v)
        tags = dict(self.tags)
        tags[v] = compose(_tag_code(tag), self.tag(v))
        return self._replace(tags=tags)

    def _delete(self, v: int) -> GraphState:
        adj = {u: ns - {v} for u, ns in self.adj.items() if u != v}
        return self._replace(adj=adj)

    # -- measurements --------------------------------------------------------

    def measure_pauli(self, v: int, basis: str, neighbor: int | None = None) -> GraphState:
        """Measure physical Pauli ``basis`` on ``v`` (``+`` branch, byproducts mod Pauli).

        ``neighbor`` picks the special neighbour of the X rule; the default is
        the lowest-id neighbour.
        """
        self._need(v)
        basis = basis.upper()
        if basis not in AXES:
            raise GraphStateError(f"unknown Pauli basis {basis!r}")
        frame = _frame_axis(self.tag(v), basis)
        if frame == "Z":
            return self._delete(v)
        if frame == "Y":
            g = self.local_complement(v)
            tags = dict(g.tags)
            for w in self.adj[v]:
                tags[w] = compose(self.tag(w), _LC_NEIGHBOUR)
            return g._replace(tags=tags)._delete(v)
        ns = self.adj[v]
        if not ns:
            return self._delete(v)
        if neighbor is None:
            b0 = min(ns)
        elif neighbor in ns:
            b0 = neighbor
        else:
            raise GraphStateError(f"{neighbor} is not a neighbour of {v}")
        g = self.local_complement(b0).local_complement(v).local_complement(b0)._delete(v)
        tags = dict(self.tags)
        tags.pop(v, None)
        tags[b0] = compose(self.tag(b0), _X_SPECIAL)
        return g._replace(tags=tags)

    # -- fusion -------------------------------------------------------------

    def fuse(self, a: int, b: int, outcome: str = "success", *,
             allow_adjacent: bool = False) -> GraphState:
        """Hadamard on ``a`` followed by a Bell measurement of ``a`` and ``b``.

        Failure acts as X on ``a`` then Z on ``b``.  Success projects the pair
        onto a two-vertex graph state; for untagged, non-adjacent vertices this
        toggles the edges between the two neighbourhoods, which on two cliques
        gives the merged clique.  Tagged or adjacent pairs go through a general
        reduction (experimental beyond cliques; checked against a state-vector
        oracle in the tests).  Adjacent pairs never arise between separate
        microclusters and are rejected unless ``allow_adjacent`` is set.
        """
        self._need(a)
        self._need(b)
        if a == b:
            raise GraphStateError("cannot fuse a vertex with itself")
        if not allow_adjacent and self.has_edge(a, b):
            raise GraphStateError(f"{a} and {b} are adjacent")
        if outcome == "failure":
            return self.measure_pauli(a, "X").measure_pauli(b, "Z")
        if outcome != "success":
            raise GraphStateError(f"unknown fusion outcome {outcome!r}")
        if not self.has_edge(a, b) and a not in self.tags and b not in self.tags:
            return self._join(a, b)
        return self._fuse_general(a, b)

    def _join(self, a: int, b: int) -> GraphState:
        na, nb = self.adj[a], self.adj[b]
        count: dict[tuple[int, int], int] = {}
        for i in na:
            for j in nb:
                if i != j:
                    key = (min(i, j), max(i, j))
                    count[key] = count.get(key, 0) + 1
        g = self._delete(a)._delete(b)
        return g._replace(adj=g._toggled(k for k, c in sorted(count.items()) if c % 2))

    def _fuse_general(self, a: int, b: int) -> GraphState:
        # work on the side that has a neighbour besides its partner
        if self.adj[b] - {a}:
            s, o = b, a
        elif self.adj[a] - {b}:
            s, o = a, b
        else:
            # a and b form a component (or two) on their own
            return self._delete(a)._delete(b)
        # the projection onto the two-vertex state absorbs a Clifford on one
        # side as H C^T H on the other, so o's tag can be carried over to s
        tags = dict(self.tags)
        moved = compose(_mirror(self.tag(o)), self.tag(s))
        tags.pop(o, None)
        tags[s] = moved
        g = self._replace(tags=tags)._diagonalise(s, o)
        g = g._replace(adj=g._toggled([(a, b)]))
        if b in g.adj[a]:
            g = g.measure_pauli(a, "X", neighbor=b)
        else:
            g = g.measure_pauli(a, "X")
        return g.measure_pauli(b, "X")

    def _diagonalise(self, s: int, o: int, depth: int = 4) -> GraphState:
        """Local complementations making the tag of ``s`` commute with CZ.

        Moves are complementations at ``s`` and at its neighbours other than
        ``o``; they only multiply the tag of ``o`` by diagonal Cliffords.
        """

        def ok(st: GraphState) -> bool:
            return st.tag(s)[2] == "Z" and st.tag(o)[2] == "Z"

        if ok(self):
            return self
        queue = deque([(self, 0)])
        seen = {self._key()}
        while queue:
            st, d = queue.popleft()
            if d == depth:
                continue
            for v in [s] + sorted(st.adj[s] - {o}):
                t = st.lc_equivalent(v)
                if ok(t):
                    return t
                key = t._key()
                if key not in seen:
                    seen.add(key)
                    queue.append((t, d + 1))
        raise GraphStateError(f"could not reduce the tag of {s}")

    def _key(self):
        return (tuple(self.edges()), tuple(sorted(self.tags.items())))

    # -- text format ------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"vertices {len(self)}: " + " ".join(str(v) for v in self.vertices)]
        lines += [f"{a} {b}" for a, b in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> GraphState:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("vertices "):
            raise GraphStateError("missing vertex census header")
        head, _, rest = lines[0].partition(":")
        count = int(head.split()[1])
        verts = [int(x) for x in rest.split()]
        if len(verts) != count:
            raise GraphStateError("vertex census does not match header count")
        edges = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise GraphStateError(f"bad edge line {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(verts, edges)


def from_edges(vertices, edges=()) -> GraphState:
    return GraphState.from_edges(vertices, edges)


def local_complement(g: GraphState, v: int) -> GraphState:
    return g.local_complement(v)


def measure_pauli(g: GraphState, v: int, basis: str, neighbor: int | None = None) -> GraphState:
    return g.measure_pauli(v, basis, neighbor)


def fuse(g: GraphState, a: int, b: int, outcome: str = "success", *,
         allow_adjacent: bool = False) -> GraphState:
    return g.fuse(a, b, outcome, allow_adjacent=allow_adjacent)


def components(g: GraphState) -> list[tuple[int, ...]]:
    return g.components()


# --------------------------------------------------------------------------
# layouts: rewrite connectivity against the relay model


def state_from_layout(layout: FusionLayout) -> GraphState:
    """Disjoint union of the microcluster graph states of ``layout``."""
    edges = [e for mc in layout.microclusters for e in mc.internal_edges()]
    return GraphState.from_edges(layout.photons, edges)


def apply_fusions(g: GraphState, pairs, outcomes) -> GraphState:
    """Fuse ``pairs`` in order with the given success flags.

    Earlier fusions can make a later pair adjacent or tagged, so the general
    reduction is always allowed here.
    """
    for (a, b), ok in zip(pairs, outcomes, strict=True):
        g = g.fuse(a, b, "success" if ok else "failure", allow_adjacent=True)
    return g


def _partition(labels: dict[int, int], keep) -> set[frozenset[int]]:
    groups: dict[int, set[int]] = {}
    for v in keep:
        groups.setdefault(labels[v], set()).add(v)
    return {frozenset(c) for c in groups.values()}


@dataclass
class FusionCheck:
    layouts: int = 0
    assignments: int = 0
    dominance_failures: list = field(default_factory=list)
    equality_failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.dominance_failures and not self.equality_failures

    def merge(self, other: FusionCheck) -> None:
        self.layouts += other.layouts
        self.assignments += other.assignments
        self.dominance_failures += other.dominance_failures
        self.equality_failures += other.equality_failures


def check_layout(layout: FusionLayout, expect_equal: bool = False) -> FusionCheck:
    """Compare rewrite and relay connectivity over every outcome assignment.

    Dominance: survivors connected after the rewrite are connected in the
    relay model.  With ``expect_equal`` the two partitions must coincide.
    """
    relay = relay_graph_from_layout(layout)
    start = state_from_layout(layout)
    survivors = relay.unmeasured
    report = FusionCheck(layouts=1)
    for outcomes in itertools.product((False, True), repeat=len(layout.fusion_pairs)):
        report.assignments += 1
        g = apply_fusions(start, layout.fusion_pairs, outcomes)
        ours = {frozenset(c) for c in g.components()}
        labels = relay.components(list(outcomes))
        theirs = _partition(labels, survivors)
        if any(len({labels[v] for v in c}) > 1 for c in ours):
            report.dominance_failures.append((layout, outcomes))
        elif expect_equal and ours != theirs:
            report.equality_failures.append((layout, outcomes))
    return report


def random_layout(rng: random.Random, max_fusions: int = 8, max_clusters: int = 5,
                  max_photons: int = 4) -> FusionLayout:
    """Small random layout of star/clique/line microclusters."""
    while True:
        k = rng.randint(2, max_clusters)
        mcs, next_id = [], 0
        for _ in range(k):
            size = rng.randint(1, max_photons)
            mcs.append(Microcluster(tuple(range(next_id, next_id + size)),
                                    rng.choice(TOPOLOGIES)))
            next_id += size
        free = [list(mc.photons) for mc in mcs]
        for f in free:
            rng.shuffle(f)
        pairs = []
        target = rng.randint(1, max_fusions)
        for _ in range(8 * target):
            if len(pairs) == target:
                break
            i, j = rng.sample(range(k), 2)
            if free[i] and free[j]:
                pairs.append((free[i].pop(), free[j].pop()))
        if pairs:
            return FusionLayout(mcs, pairs)


def clique_tree_layout(rng: random.Random, clusters: int = 5, max_photons: int = 4) -> FusionLayout:
    """Cliques fused along a random tree, each with spare photons left over."""
    mcs, free, next_id = [], [], 0
    for i in range(clusters):
        size = rng.randint(2, max_photons)
        mcs.append(Microcluster(tuple(range(next_id, next_id + size)), "clique"))
        free.append(list(range(next_id, next_id + size)))
        next_id += size
    pairs = []
    for i in range(1, clusters):
        options = [j for j in range(i) if free[j]]
        if not options or not free[i]:
            continue
        j = rng.choice(options)
        pairs.append((free[j].pop(), free[i].pop()))
    return FusionLayout(mcs, pairs)


def verify_fusion(layouts: int = 100, seed: int = 1729, max_fusions: int = 8,
                  trees: int = 20) -> FusionCheck:
    """Dominance on random layouts plus equality on clique trees."""
    rng = random.Random(seed)
    report = FusionCheck()
    for _ in range(layouts):
        report.merge(check_layout(random_layout(rng, max_fusions)))
    for _ in range(trees):
        report.merge(check_layout(clique_tree_layout(rng), expect_equal=True))
    return report
