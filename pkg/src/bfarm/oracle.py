"""Horizontal-scan reference implementations.

Everything here works on rows held as sets of item indices and counts by
scanning those rows.  Nothing is imported from the tree or miner modules;
the point is to have a second, unrelated route to the same answers.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .model import AssociationRule, Itemset, MiningConfig, parse_threshold, rule_order
from .schema import ItemCatalog, RawTable

Rows = Sequence[frozenset]


def transactions(table: RawTable, catalog: ItemCatalog) -> list[frozenset]:
    """Item sets of each row, read straight from the raw cells."""
    index = {(it.attribute, it.value): it.index for it in catalog}
    out = []
    for row in table.rows:
        out.append(frozenset(
            index[(a, v)] for a, v in zip(table.header, row) if (a, v) in index))
    return out


def _need(minsup, n: int) -> int:
    f = parse_threshold(minsup)
    return -(-f.numerator * n // f.denominator)


def brute_force_support(itemset: Iterable[int], rows: Rows) -> int:
    s = frozenset(itemset)
    if not s:
        raise ValueError("itemsets are non-empty")
    return sum(1 for r in rows if s <= r)


def _join_prune(level: list[Itemset]) -> list[Itemset]:
    known = set(level)
    out = set()
    by_prefix: dict[Itemset, list[int]] = {}
    for s in level:
        by_prefix.setdefault(s[:-1], []).append(s[-1])
    for prefix, tails in by_prefix.items():
        tails.sort()
        for x, y in combinations(tails, 2):
            cand = prefix + (x, y)
            if all(sub in known for sub in combinations(cand, len(cand) - 1)):
                out.add(cand)
    return sorted(out)


def _scan_count(candidates: list[Itemset], rows: Rows, k: int) -> dict[Itemset, int]:
    counts = dict.fromkeys(candidates, 0)
    wanted = set().union(*candidates) if candidates else set()
    for r in rows:
        items = sorted(r & wanted)
        if len(items) < k:
            continue
        if comb(len(items), k) <= len(candidates):
            for sub in combinations(items, k):
                if sub in counts:
                    counts[sub] += 1
        else:
            rs = set(items)
            for c in candidates:
                if rs.issuperset(c):
                    counts[c] += 1
    return counts


def apriori_reference(rows: Rows, minsup, max_size: int | None = None) -> dict[Itemset, int]:
    """Classic Apriori: one scan of ``rows`` per lattice level."""
    if not rows:
        raise ValueError("no rows")
    need = _need(minsup, len(rows))
    singles: dict[int, int] = {}
    for r in rows:
        for i in r:
            singles[i] = singles.get(i, 0) + 1
    result = {(i,): c for i, c in singles.items() if c >= need}
    level = sorted(result)
    k = 1
    while level and (max_size is None or k < max_size):
        k += 1
        cands = _join_prune(level)
        counts = _scan_count(cands, rows, k)
        level = [c for c in cands if counts[c] >= need]
        result.update((c, counts[c]) for c in level)
    return result


def enumerate_frequent(rows: Rows, minsup, n_items: int) -> dict[Itemset, int]:
    """Every non-empty subset of ``range(n_items)``, counted.  Exponential."""
    need = _need(minsup, len(rows))
    out = {}
    for k in range(1, n_items + 1):
        for s in combinations(range(n_items), k):
            c = brute_force_support(s, rows)
            if c >= need:
                out[s] = c
    return out


def rules_from_counts(counts: dict[Itemset, int], n_rows: int, config: MiningConfig
                      ) -> list[AssociationRule]:
    rules = []
    for s, c in counts.items():
        if len(s) < 2:
            continue
        if config.max_antecedent is not None and len(s) - 1 > config.max_antecedent:
            continue
        for d in s:
            if not config.is_decision(d):
                continue
            x = tuple(i for i in s if i != d)
            if Fraction(c, counts[x]) >= config.minconf:
                rules.append(AssociationRule(x, d, c, counts[x], n_rows))
    return sorted(rules, key=rule_order)


def brute_force_rules(rows: Rows, config: MiningConfig, catalog: ItemCatalog
                      ) -> list[AssociationRule]:
    """All strong rules X -> d, found by enumerating antecedents.

    Antecedents grow one item at a time in index order; a branch stops once
    X + d drops below minimum support, since no superset can recover.
    """
    n = len(rows)
    need = _need(config.minsup, n)
    limit = config.max_antecedent or len(catalog)
    rules = []
    for d in range(len(catalog)):
        if not config.is_decision(d):
            continue
        pool = [i for i in range(len(catalog)) if catalog[i].attribute != catalog[d].attribute]
        d_rows = [r for r in rows if d in r]

        def grow(x: tuple, start: int):
            for p in range(start, len(pool)):
                ante = x + (pool[p],)
                both = brute_force_support(ante, d_rows) if d_rows else 0
                if both < need:
                    continue
                base = brute_force_support(ante, rows)
                if Fraction(both, base) >= config.minconf:
                    rules.append(AssociationRule(ante, d, both, base, n))
                if len(ante) < limit:
                    grow(ante, p + 1)

        grow((), 0)
    return sorted(rules, key=rule_order)


def reference_mine(rows: Rows, config: MiningConfig) -> tuple[dict[Itemset, int], list[AssociationRule]]:
    """Frequent itemsets and strong rules the slow, obvious way."""
    counts = apriori_reference(rows, config.minsup, config.max_itemset_size)
    return counts, rules_from_counts(counts, len(rows), config)

