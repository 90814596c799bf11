"""Rooted graphs over arbitrary hashable vertex labels.

Covers the combinatorial side of the density formula: twins and twinfree
quotients, blowups, the rooted version of a graph, isomorphism with roots
matched in order, and the structure-preserving maps counted by the formula.

A map phi between rooted graphs is counted when it
  * preserves the relation both ways: uv is an edge iff phi(u)phi(v) is
    (a collapsed pair phi(u) = phi(v) therefore forces uv to be a non-edge),
  * respects roots: phi(v) is a root iff v is, and
  * preserves the root order strictly, so it is injective on roots.
"""

import itertools


def _label_key(v):
    # deterministic ordering for mixed label types
    return (v.__class__.__name__, repr(v))


class RootedGraph:
    """A finite simple graph with a linearly ordered tuple of root vertices.

    The root order is the tuple order.  Vertices are arbitrary hashable
    labels; edges are unordered pairs of distinct vertices.
    """

    __slots__ = ("vertices", "edges", "roots", "_adj")

    def __init__(self, vertices, edges, roots=()):
        vs = frozenset(vertices)
        es = frozenset(frozenset(e) for e in edges)
        rt = tuple(roots)
        for e in es:
            if len(e) != 2:
                raise ValueError(f"edge {set(e)} is not a pair of distinct vertices")
            if not e <= vs:
                raise ValueError(f"edge {set(e)} uses a vertex outside the graph")
        if len(set(rt)) != len(rt):
            raise ValueError(f"repeated root in {rt}")
        if not set(rt) <= vs:
            raise ValueError("root outside the vertex set")
        adj = {v: set() for v in vs}
        for e in es:
            u, v = tuple(e)
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)
        object.__setattr__(self, "roots", rt)
        object.__setattr__(self, "_adj", {v: frozenset(n) for v, n in adj.items()})

    def neighbors(self, v):
        return self._adj[v]

    def has_edge(self, u, v):
        return v in self._adj[u]

    def is_root(self, v):
        return v in self.roots

    def nonroots(self):
        rs = set(self.roots)
        return [v for v in sorted(self.vertices, key=_label_key) if v not in rs]

    def __eq__(self, other):
        if not isinstance(other, RootedGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.roots == other.roots
        )

    def __hash__(self):
        return hash((self.vertices, self.edges, self.roots))

    def __repr__(self):
        vs = sorted(self.vertices, key=_label_key)
        es = sorted((tuple(sorted(e, key=_label_key)) for e in self.edges),
                    key=lambda e: (_label_key(e[0]), _label_key(e[1])))
        return f"RootedGraph({vs}, {es}, roots={list(self.roots)})"

    def to_json_obj(self):
        vs = sorted(self.vertices, key=_label_key)
        es = sorted((sorted(e, key=_label_key) for e in self.edges),
                    key=lambda e: (_label_key(e[0]), _label_key(e[1])))
        return {
            "vertices": [_jsonable(v) for v in vs],
            "edges": [[_jsonable(u), _jsonable(v)] for u, v in es],
            "roots": [_jsonable(v) for v in self.roots],
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _unjson(v):
    if isinstance(v, list):
        return tuple(_unjson(x) for x in v)
    return v


def rooted_graph_from_json_obj(obj):
    """Inverse of RootedGraph.to_json_obj; list labels become tuples.
    The serialized root list order is the root order."""
    extra = set(obj) - {"vertices", "edges", "roots"}
    if extra:
        raise ValueError(f"unknown fields in rooted graph: {sorted(extra)}")
    return RootedGraph(
        [_unjson(v) for v in obj.get("vertices", [])],
        [(_unjson(u), _unjson(v)) for u, v in obj.get("edges", [])],
        [_unjson(v) for v in obj.get("roots", [])],
    )


# ------------------------------------------------------------- twins, quotient

def are_twins(g, u, v):
    """Equal open neighborhoods.  Adjacent vertices are never twins."""
    return g.neighbors(u) == g.neighbors(v)


def twin_classes(g):
    """Classes of the relation: u ~ v iff u = v, or u and v are twins and
    the roots contain both or neither of them.  Root classes come first,
    ordered by the position of their earliest member in the root order;
    non-root classes follow in label order."""
    root_pos = {v: i for i, v in enumerate(g.roots)}
    buckets = {}
    for v in g.vertices:
        key = (g.neighbors(v), v in root_pos)
        buckets.setdefault(key, set()).add(v)
    classes = [frozenset(c) for c in buckets.values()]

    def order_key(cls):
        positions = [root_pos[v] for v in cls if v in root_pos]
        if positions:
            return (0, min(positions))
        return (1, min(_label_key(v) for v in cls))

    return sorted(classes, key=order_key)


def is_twinfree(g):
    """No two distinct vertices are twins unless exactly one is a root."""
    return all(len(c) == 1 for c in twin_classes(g))


def twinfree_version(g):
    """Quotient by the twin relation.  Each class is labelled by its
    minimal member; classes inherit edges between members and the root
    classes keep the order induced by their earliest members."""
    classes = twin_classes(g)
    rep_of = {}
    reps = {}
    for cls in classes:
        rep = min(cls, key=_label_key)
        reps[cls] = rep
        for v in cls:
            rep_of[v] = rep
    edges = {frozenset((rep_of[u], rep_of[v])) for u, v in (tuple(e) for e in g.edges)
             if rep_of[u] != rep_of[v]}
    root_set = set(g.roots)
    roots = [reps[cls] for cls in classes if cls & root_set]
    return RootedGraph(reps.values(), edges, roots)


def class_sizes(g):
    """Twin class sizes keyed by the minimal member, matching the labels
    of twinfree_version(g)."""
    return {min(c, key=_label_key): len(c) for c in twin_classes(g)}


# ------------------------------------------------------------------- blowups

def blowup(base, m):
    """Replace vertex v by m[v] copies labelled (v, 1..m[v]); copies of v
    and w are fully joined iff vw is an edge, never among themselves.
    Copies of the i-th root form the i-th consecutive interval of the
    root order.  A multiplicity of 0 deletes the vertex."""
    if set(m) != base.vertices:
        raise ValueError("multiplicity vector must be indexed exactly by the vertices")
    for v, cnt in m.items():
        if cnt < 0:
            raise ValueError(f"negative multiplicity {cnt} for {v!r}")
    verts = [(v, t) for v in base.vertices for t in range(1, m[v] + 1)]
    edges = [
        ((u, s), (v, t))
        for u, v in (tuple(e) for e in base.edges)
        for s in range(1, m[u] + 1)
        for t in range(1, m[v] + 1)
    ]
    roots = [(r, t) for r in base.roots for t in range(1, m[r] + 1)]
    return RootedGraph(verts, edges, roots)


def rooted_version(g, subset):
    """Duplicate every vertex x of the subset as (x, 'dup'), adjacent to
    exactly the neighbors of x and to the duplicates of x's neighbors in
    the subset.  The duplicates are the roots, in subset order; original
    vertices keep their labels and are unrooted."""
    subset = tuple(subset)
    if len(set(subset)) != len(subset):
        raise ValueError(f"repeated vertex in {subset}")
    if not set(subset) <= g.vertices:
        raise ValueError("subset vertex outside the graph")
    dup = {x: (x, "dup") for x in subset}
    verts = list(g.vertices) + list(dup.values())
    edges = [tuple(e) for e in g.edges]
    for x in subset:
        for w in g.neighbors(x):
            edges.append((dup[x], w))
    for x, y in itertools.combinations(subset, 2):
        if g.has_edge(x, y):
            edges.append((dup[x], dup[y]))
    return RootedGraph(verts, edges, [dup[x] for x in subset])


def root_twin_count(g):
    """Number of non-roots that are twins of some root."""
    roots = set(g.roots)
    root_nbhds = {g.neighbors(r) for r in roots}
    return sum(1 for v in g.vertices
               if v not in roots and g.neighbors(v) in root_nbhds)


def vstar(g):
    """Non-root count minus the number of non-roots twinned with a root."""
    return len(g.vertices) - len(g.roots) - root_twin_count(g)


# ----------------------------------------------------- isomorphism, rrr maps

def _iso_maps(g1, g2):
    """Generate isomorphisms g1 -> g2 matching roots in order."""
    if len(g1.vertices) != len(g2.vertices):
        return
    if len(g1.edges) != len(g2.edges):
        return
    if len(g1.roots) != len(g2.roots):
        return
    deg1 = sorted(len(g1.neighbors(v)) for v in g1.vertices)
    deg2 = sorted(len(g2.neighbors(v)) for v in g2.vertices)
    if deg1 != deg2:
        return
    phi = {}
    for r1, r2 in zip(g1.roots, g2.roots):
        phi[r1] = r2
    for (u, v) in itertools.combinations(g1.roots, 2):
        if g1.has_edge(u, v) != g2.has_edge(phi[u], phi[v]):
            return
    for u, img in phi.items():
        if len(g1.neighbors(u)) != len(g2.neighbors(img)):
            return
    free = sorted(
        (v for v in g1.vertices if not g1.is_root(v)),
        key=lambda v: (-len(g1.neighbors(v)), _label_key(v)),
    )

    def extend(i, used):
        if i == len(free):
            yield dict(phi)
            return
        v = free[i]
        dv = len(g1.neighbors(v))
        for c in sorted(g2.vertices, key=_label_key):
            if c in used or g2.is_root(c):
                continue
            if len(g2.neighbors(c)) != dv:
                continue
            if any(g1.has_edge(u, v) != g2.has_edge(img, c)
                   for u, img in phi.items()):
                continue
            phi[v] = c
            used.add(c)
            yield from extend(i + 1, used)
            del phi[v]
            used.discard(c)

    yield from extend(0, set(phi[r] for r in g1.roots))


def find_isomorphism(g1, g2):
    """An isomorphism g1 -> g2 sending the i-th root to the i-th root,
    or None."""
    for phi in _iso_maps(g1, g2):
        return phi
    return None


def isomorphic(g1, g2):
    return find_isomorphism(g1, g2) is not None


def automorphisms(g):
    """All automorphisms fixing the root order (hence each root)."""
    return list(_iso_maps(g, g))


def count_rrr_maps(src, dst):
    """All relation-preserving, root-respecting, root-order-preserving maps
    from src to dst, as dictionaries.  Maps need not be injective on
    non-roots, but strict order preservation makes them injective on roots;
    more roots in src than dst means there are none."""
    maps = []
    nr_dst = [v for v in sorted(dst.vertices, key=_label_key)
              if not dst.is_root(v)]
    src_free = sorted(
        (v for v in src.vertices if not src.is_root(v)),
        key=lambda v: (-len(src.neighbors(v)), _label_key(v)),
    )

    def consistent(phi, v, c):
        for u, img in phi.items():
            has = src.has_edge(u, v)
            if img == c:
                if has:
                    return False
                continue
            if has != dst.has_edge(img, c):
                return False
        return True

    def extend(phi, i):
        if i == len(src_free):
            maps.append(dict(phi))
            return
        v = src_free[i]
        for c in nr_dst:
            if consistent(phi, v, c):
                phi[v] = c
                extend(phi, i + 1)
                del phi[v]

    for chosen in itertools.combinations(range(len(dst.roots)), len(src.roots)):
        phi = {src.roots[i]: dst.roots[p] for i, p in enumerate(chosen)}
        if all(src.has_edge(u, v) == dst.has_edge(phi[u], phi[v])
               for u, v in itertools.combinations(src.roots, 2)):
            extend(phi, 0)
    return maps


def blowup_vectors_equivalent(base, m, n):
    """Whether some automorphism phi of the twinfree rooted base carries the
    multiplicity vector m to n, i.e. m[v] = n[phi(v)] for all v.  For a
    twinfree base this holds iff the two blowups are isomorphic."""
    if not is_twinfree(base):
        raise ValueError("blowup vector comparison requires a twinfree base")
    if set(m) != base.vertices or set(n) != base.vertices:
        raise ValueError("multiplicity vectors must be indexed by the vertices")
    for phi in _iso_maps(base, base):
        if all(m[v] == n[phi[v]] for v in base.vertices):
            return True
    return False
