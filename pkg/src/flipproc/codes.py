"""Labelled graphs on [k] as edge bitmasks, the vertex-relabelling action,
and orbit classes of pair-rooted graphs.

A graph on [k] = {1, ..., k} is an integer whose bit at index
(j-1)(j-2)/2 + (i-1) records the pair {i, j}, i < j.  Pairs are therefore
ordered colexicographically, and the pairs inside [k1] occupy exactly the
low k1(k1-1)/2 bits of any order k2 >= k1: a code keeps its meaning when
read at a higher order.  Rule lifting relies on this.

Orbit classes of (graph, ordered root pair) triples under simultaneous
relabelling are canonicalized by brute-force minimum over the k! images;
results are memoized per element, so sweeping a whole orbit costs one
orbit computation.
"""

import itertools
import os
from dataclasses import dataclass

DEFAULT_CAP = 6
CAP_ENV_VAR = "FLIPPROC_CAP"


class CapExceeded(Exception):
    """An operation would enumerate a graph space beyond the configured cap."""


def enumeration_cap(cap=None):
    """Resolve the enumeration cap: explicit argument, else the
    FLIPPROC_CAP environment variable, else the default of 6."""
    if cap is not None:
        return int(cap)
    env = os.environ.get(CAP_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{CAP_ENV_VAR} must be an integer, got {env!r}")
    return DEFAULT_CAP


def _check_cap(k, cap, what):
    limit = enumeration_cap(cap)
    if k > limit:
        raise CapExceeded(
            f"{what} at order {k} exceeds the enumeration cap {limit}; "
            f"raise it explicitly (--cap / {CAP_ENV_VAR}) if this is intended"
        )


def num_pairs(k):
    return k * (k - 1) // 2


def pair_index(i, j):
    """Bit index of the pair {i, j} of distinct vertices, 1-based labels."""
    if i == j:
        raise ValueError(f"pair requires distinct vertices, got {{{i}, {j}}}")
    if i > j:
        i, j = j, i
    if i < 1:
        raise ValueError(f"vertex labels start at 1, got {i}")
    return (j - 1) * (j - 2) // 2 + (i - 1)


def pair_list(k):
    """All pairs inside [k] in bit-index (colex) order."""
    return _pair_list(k)


def _pair_list_uncached(k):
    out = []
    for j in range(2, k + 1):
        for i in range(1, j):
            out.append((i, j))
    return tuple(out)


_pair_list_memo = {}


def _pair_list(k):
    got = _pair_list_memo.get(k)
    if got is None:
        got = _pair_list_memo[k] = _pair_list_uncached(k)
    return got


def full_bits(k):
    return (1 << num_pairs(k)) - 1


@dataclass(frozen=True, order=True)
class GraphCode:
    """A labelled graph on [order] encoded as an edge bitmask."""

    order: int
    bits: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not 0 <= self.bits < (1 << num_pairs(self.order)):
            raise ValueError(
                f"bits {self.bits} out of range for order {self.order}"
            )

    def has_edge(self, i, j):
        return self.bits >> pair_index(i, j) & 1 == 1

    def edges(self):
        return tuple(
            p for idx, p in enumerate(_pair_list(self.order))
            if self.bits >> idx & 1
        )

    def edge_count(self):
        return self.bits.bit_count()

    def complement(self):
        return GraphCode(self.order, self.bits ^ full_bits(self.order))


@dataclass(frozen=True, order=True)
class RootedPairGraph:
    """A labelled graph together with an ordered pair of distinct roots."""

    graph: GraphCode
    a: int
    b: int

    def __post_init__(self):
        k = self.graph.order
        if not (1 <= self.a <= k and 1 <= self.b <= k):
            raise ValueError(f"roots ({self.a}, {self.b}) outside [{k}]")
        if self.a == self.b:
            raise ValueError("root pair must be two distinct vertices")

    @property
    def order(self):
        return self.graph.order

    def key(self):
        return (self.graph.bits, self.a, self.b)


@dataclass(frozen=True, order=True)
class OrbitClass:
    """An orbit of pair-rooted graphs under simultaneous relabelling,
    named by its minimal element."""

    canon: RootedPairGraph
    size: int

    @property
    def order(self):
        return self.canon.order

    def to_json_obj(self):
        return {
            "class": {
                "code": self.canon.graph.bits,
                "a": self.canon.a,
                "b": self.canon.b,
            },
            "size": self.size,
        }


# ---------------------------------------------------------------- group action

_perms_memo = {}


def all_perms(k):
    """All permutations of [k]; sigma[i-1] is the image of vertex i."""
    got = _perms_memo.get(k)
    if got is None:
        got = _perms_memo[k] = tuple(
            itertools.permutations(range(1, k + 1))
        )
    return got


_pair_maps_memo = {}


def _pair_maps(k):
    """For each permutation, the induced map on pair bit indices."""
    got = _pair_maps_memo.get(k)
    if got is None:
        pairs = _pair_list(k)
        maps = []
        for sigma in all_perms(k):
            maps.append(tuple(
                pair_index(sigma[i - 1], sigma[j - 1]) for i, j in pairs
            ))
        got = _pair_maps_memo[k] = tuple(maps)
    return got


def apply_perm_bits(pair_map, bits):
    out = 0
    w = bits
    while w:
        low = w & -w
        out |= 1 << pair_map[low.bit_length() - 1]
        w ^= low
    return out


def apply_perm(sigma, element):
    """Relabel a pair-rooted graph by the permutation sigma of [k]."""
    k = element.order
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(1, k + 1)):
        raise ValueError(f"{sigma} is not a permutation of [{k}]")
    idx = all_perms(k).index(sigma)
    pmap = _pair_maps(k)[idx]
    return RootedPairGraph(
        GraphCode(k, apply_perm_bits(pmap, element.graph.bits)),
        sigma[element.a - 1],
        sigma[element.b - 1],
    )


def apply_perm_graph(sigma, code):
    """Relabel an unrooted graph code by the permutation sigma."""
    k = code.order
    sigma = tuple(sigma)
    idx = all_perms(k).index(sigma)
    pmap = _pair_maps(k)[idx]
    return GraphCode(k, apply_perm_bits(pmap, code.bits))


# --------------------------------------------------------------- orbit classes

_canon_memo = {}


def _orbit_of(k, bits, a, b):
    pmaps = _pair_maps(k)
    perms = all_perms(k)
    seen = set()
    for idx, sigma in enumerate(perms):
        seen.add((
            apply_perm_bits(pmaps[idx], bits),
            sigma[a - 1],
            sigma[b - 1],
        ))
    return seen


def canonical_class(element, _memo=_canon_memo):
    """The orbit class of a pair-rooted graph: minimal orbit element
    (lexicographic on (bits, a, b)) plus the orbit size."""
    k = element.order
    key = (k, element.graph.bits, element.a, element.b)
    got = _memo.get(key)
    if got is None:
        orbit = _orbit_of(k, element.graph.bits, element.a, element.b)
        canon = min(orbit)
        size = len(orbit)
        for member in orbit:
            _memo[(k,) + member] = (canon, size)
        got = (canon, size)
    canon, size = got
    return OrbitClass(
        RootedPairGraph(GraphCode(k, canon[0]), canon[1], canon[2]), size
    )


def enumerate_classes(k, cap=None):
    """All orbit classes of pair-rooted graphs at order k, sorted by their
    canonical representatives.  Order 1 has no pairs, hence no classes."""
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")
    _check_cap(k, cap, "orbit census")
    if k == 1:
        return []
    out = []
    seen = set()
    ordered_pairs = [
        (a, b)
        for a in range(1, k + 1)
        for b in range(1, k + 1)
        if a != b
    ]
    for bits in range(1 << num_pairs(k)):
        for a, b in ordered_pairs:
            if (bits, a, b) in seen:
                continue
            orbit = _orbit_of(k, bits, a, b)
            seen |= orbit
            canon = min(orbit)
            size = len(orbit)
            for member in orbit:
                _canon_memo[(k,) + member] = (canon, size)
            # the sweep visits triples in canonical order, so the first
            # unseen member of each orbit is its minimum
            out.append(OrbitClass(
                RootedPairGraph(GraphCode(k, canon[0]), canon[1], canon[2]),
                size,
            ))
    return out
