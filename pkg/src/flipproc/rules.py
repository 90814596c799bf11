"""Replacement rules: sparse row-stochastic matrices over the labelled
graphs of a fixed order, with exact rational entries.

A rule maps each drawn graph F to a distribution over replacement graphs.
Rows without explicit entries are identity rows (keep F with probability 1),
so sparse rules stay sparse under every operation here.  Construction
normalizes: exact zeros are dropped and a row stored as the point mass on
its own index is dropped too, making structural equality semantic equality.
"""

import json
from fractions import Fraction

from .codes import apply_perm_bits, full_bits, num_pairs, pair_index, _pair_maps


class RuleValidationError(ValueError):
    """Raised by validate(); .problems lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid rule: " + "; ".join(self.problems))


class Rule:
    """order: number of sampled vertices k.
    entries: mapping (from_bits, to_bits) -> probability, exact rationals."""

    __slots__ = ("order", "entries", "_rows")

    def __init__(self, order, entries=None):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        norm = {}
        for (f, h), p in (entries or {}).items():
            p = p if isinstance(p, Fraction) else Fraction(p)
            if p == 0:
                continue
            norm[(int(f), int(h))] = norm.get((int(f), int(h)), Fraction(0)) + p
        rows = {}
        for (f, h), p in norm.items():
            rows.setdefault(f, {})[h] = p
        for f in [f for f, row in rows.items() if row == {f: Fraction(1)}]:
            del rows[f]
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(
            self, "entries",
            {(f, h): p for f in sorted(rows) for h, p in sorted(rows[f].items())},
        )

    def rows(self):
        """Explicit rows only, as {from_bits: {to_bits: probability}}."""
        return self._rows

    def row(self, f):
        """The explicit row for f, or None when f is an identity row."""
        return self._rows.get(f)

    def probability(self, f, h):
        row = self._rows.get(f)
        if row is None:
            return Fraction(1) if f == h else Fraction(0)
        return row.get(h, Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, Rule):
            return NotImplemented
        return self.order == other.order and self.entries == other.entries

    def __hash__(self):
        return hash((self.order, tuple(sorted(self.entries.items()))))

    def __repr__(self):
        return f"Rule(order={self.order}, entries={len(self.entries)})"


def rule_problems(rule):
    """Every validation violation, as human-readable strings."""
    problems = []
    limit = 1 << num_pairs(rule.order)
    for f, row in sorted(rule.rows().items()):
        if not 0 <= f < limit:
            problems.append(f"row index {f} out of range for order {rule.order}")
        total = Fraction(0)
        for h, p in sorted(row.items()):
            if not 0 <= h < limit:
                problems.append(
                    f"replacement index {h} out of range for order {rule.order}"
                )
            if p < 0 or p > 1:
                problems.append(f"entry ({f} -> {h}) has probability {p} outside [0, 1]")
            total += p
        if total != 1:
            problems.append(f"row {f} has row sum {total}")
    return problems


def validate(rule):
    """Raise RuleValidationError listing all problems; no-op when valid."""
    problems = rule_problems(rule)
    if problems:
        raise RuleValidationError(problems)


# --------------------------------------------------------------- named rules

def _graph_bits(k, edges):
    bits = 0
    for i, j in edges:
        bits |= 1 << pair_index(i, j)
    return bits


def make_named(family, k, **params):
    """Construct a named rule family at order k.  Families:
    identity, triangle-removal, triangle-edge-removal, complementing,
    extremist (threshold=...), clique-removal, ignorant (dist=...),
    component-completion (not implemented)."""
    family = family.replace("_", "-")
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k}")
    P = num_pairs(k)

    if family == "identity":
        return Rule(k, {})

    if family == "triangle-removal":
        if k != 3:
            raise ValueError("triangle-removal is an order-3 rule")
        return Rule(3, {(7, 0): Fraction(1)})

    if family == "triangle-edge-removal":
        if k != 3:
            raise ValueError("triangle-edge-removal is an order-3 rule")
        third = Fraction(1, 3)
        return Rule(3, {(7, 7 ^ (1 << e)): third for e in range(3)})

    if family == "complementing":
        comp = full_bits(k)
        return Rule(k, {(f, f ^ comp): Fraction(1) for f in range(1 << P)})

    if family == "extremist":
        threshold = params.pop("threshold", Fraction(P, 2))
        _reject_params(family, params)
        threshold = threshold if isinstance(threshold, Fraction) else Fraction(threshold)
        entries = {}
        for f in range(1 << P):
            target = full_bits(k) if f.bit_count() >= threshold else 0
            entries[(f, target)] = Fraction(1)
        return Rule(k, entries)

    if family == "clique-removal":
        return Rule(k, {(full_bits(k), 0): Fraction(1)})

    if family == "ignorant":
        dist = params.pop("dist", None)
        _reject_params(family, params)
        if dist is None:
            raise ValueError("ignorant rule needs dist={to_bits: probability}")
        dist = {int(h): Fraction(p) for h, p in dist.items()}
        if sum(dist.values()) != 1 or any(p < 0 for p in dist.values()):
            raise ValueError("ignorant dist must be a probability distribution")
        entries = {}
        for f in range(1 << P):
            for h, p in dist.items():
                entries[(f, h)] = p
        return Rule(k, entries)

    if family == "component-completion":
        raise NotImplementedError(
            "component-completion is recognized but intentionally not implemented"
        )

    raise ValueError(f"unknown rule family {family!r}")


def _reject_params(family, params):
    if params:
        raise ValueError(f"unknown parameters for {family}: {sorted(params)}")


# ----------------------------------------------------------------- predicates

def is_symmetric(rule):
    """Invariance under simultaneous relabelling of both indices.

    Checking every explicit entry against each relabelled position suffices:
    construction strips zero entries and identity point rows, so any
    asymmetry involves a positive entry whose image position disagrees, and
    that entry is explicit on at least one side of the comparison.
    """
    pmaps = _pair_maps(rule.order)
    for (f, h), p in rule.entries.items():
        for pmap in pmaps:
            if rule.probability(apply_perm_bits(pmap, f),
                                apply_perm_bits(pmap, h)) != p:
                return False
    return True


def is_deterministic(rule):
    """Every row is a point mass."""
    return all(
        len(row) == 1 and next(iter(row.values())) == 1
        for row in rule.rows().values()
    )


def ignorant_edge_count(rule):
    """The common expected replacement edge count when the rule ignores its
    input (every row is the same distribution), else None."""
    k = rule.order
    shared = None
    for f in range(1 << num_pairs(k)):
        row = rule.row(f)
        if row is None:
            row = {f: Fraction(1)}
        if shared is None:
            shared = row
        elif row != shared:
            return None
    return sum(p * Fraction(h.bit_count()) for h, p in shared.items())


# -------------------------------------------------------------- serialization

def rule_to_json_obj(rule):
    return {
        "order": rule.order,
        "entries": [
            {"from": f, "to": h, "p": str(p)}
            for (f, h), p in rule.entries.items()
        ],
        "default": "identity",
    }


def rule_to_json(rule):
    return json.dumps(rule_to_json_obj(rule), indent=2) + "\n"


def rule_from_json_obj(obj):
    if not isinstance(obj, dict):
        raise ValueError("rule JSON must be an object")
    extra = set(obj) - {"order", "entries", "default"}
    if extra:
        raise ValueError(f"unknown fields in rule: {sorted(extra)}")
    if "order" not in obj:
        raise ValueError("rule JSON is missing the order")
    order = obj["order"]
    if not isinstance(order, int) or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    default = obj.get("default", "identity")
    if default != "identity":
        raise ValueError(f"unsupported default {default!r}; only identity rows are implicit")
    entries = {}
    for item in obj.get("entries", []):
        extra = set(item) - {"from", "to", "p"}
        if extra:
            raise ValueError(f"unknown fields in rule entry: {sorted(extra)}")
        try:
            f, h = item["from"], item["to"]
        except KeyError as missing:
            raise ValueError(f"rule entry is missing {missing}")
        if not isinstance(f, int) or not isinstance(h, int):
            raise ValueError("entry graph codes must be integers")
        p = item.get("p")
        if isinstance(p, str):
            p = Fraction(p)  # accepts "p/q" and decimal strings, both exact
        elif isinstance(p, int) and not isinstance(p, bool):
            p = Fraction(p)
        else:
            raise ValueError(
                f"probability must be an exact string such as \"1/3\", got {p!r}"
            )
        entries[(f, h)] = entries.get((f, h), Fraction(0)) + p
    return Rule(order, entries)


def parse_rule_json(text):
    return rule_from_json_obj(json.loads(text))


def load_rule(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rule_json(fh.read())


def save_rule(rule, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rule_to_json(rule))
