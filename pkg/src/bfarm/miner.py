"""Level-wise frequent itemset mining and rule derivation over count trees.

Supports never come from the bitmap table: single items read the root
count of their tree, larger itemsets read the root count of the AND of
their items' trees.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import (AssociationRule, FrequentItemset, Itemset, MiningConfig, UsageError,
                    itemset_order, rule_order)
from .ptree import PTree, and_many, build, ptree_and
from .schema import BitmapTable, ItemCatalog

log = logging.getLogger(__name__)

# Cap on the total node count of cached derived trees (roughly 100 bytes each).
DEFAULT_CACHE_NODES = 2_000_000


class MiningError(RuntimeError):
    pass


@dataclass(frozen=True)
class MiningResult:
    n_rows: int
    itemsets: tuple[FrequentItemset, ...]
    rules: tuple[AssociationRule, ...]

    def levels(self) -> list[int]:
        """Number of frequent itemsets of each size, starting at size 1."""
        out: list[int] = []
        for s in self.itemsets:
            k = len(s.items)
            while len(out) < k:
                out.append(0)
            out[k - 1] += 1
        return out

    def counts(self) -> dict[Itemset, int]:
        return {s.items: s.count for s in self.itemsets}

    def to_dict(self, catalog: ItemCatalog | None = None) -> dict:
        label = (lambda i: catalog[i].label) if catalog is not None else (lambda i: i)
        return {
            "n_rows": self.n_rows,
            "itemsets_per_level": self.levels(),
            "itemsets": [{"items": [label(i) for i in s.items], "count": s.count}
                         for s in self.itemsets],
            "rules": [rule_to_dict(r, catalog) for r in self.rules],
        }

    def serialize(self, catalog: ItemCatalog | None = None) -> str:
        return json.dumps(self.to_dict(catalog), sort_keys=True)


def rule_to_dict(r: AssociationRule, catalog: ItemCatalog | None = None) -> dict:
    label = (lambda i: catalog[i].label) if catalog is not None else (lambda i: i)
    return {
        "antecedent": [label(i) for i in r.antecedent],
        "consequent": label(r.consequent),
        "count": r.count,
        "support": float(r.support),
        "confidence": float(r.confidence),
    }


def trees_from_bitmap(bitmap: BitmapTable) -> list[PTree]:
    return [build(bitmap.column(i)) for i in range(bitmap.n_items)]


def _root_counts(trees) -> list[int]:
    # stores expose header counts so no tree body is decoded here
    counts = getattr(trees, "root_counts", None)
    if counts is not None:
        return list(counts)
    return [t.root_count for t in trees]


def frequent_one_itemsets(trees: Sequence[PTree], n_rows: int, minsup,
                          item_filter: Iterable[int] | None = None) -> list[FrequentItemset]:
    if n_rows < 1:
        raise UsageError("n_rows must be >= 1")
    need = MiningConfig(minsup, 1, "free").min_count(n_rows)
    counts = _root_counts(trees)
    items = range(len(counts)) if item_filter is None else sorted(set(item_filter))
    return [FrequentItemset((i,), counts[i], n_rows) for i in items if counts[i] >= need]


def candidate_gen(frequent: Sequence[Itemset]) -> list[Itemset]:
    """Apriori join of k-itemsets sharing their first k-1 items, then subset pruning."""
    fk = sorted(frequent)
    known = set(fk)
    out = []
    for i, a in enumerate(fk):
        prefix = a[:-1]
        for b in fk[i + 1:]:
            if b[:-1] != prefix:
                break
            c = a + (b[-1],)
            # dropping either of the last two items gives a or b, both known
            if all(c[:j] + c[j + 1:] in known for j in range(len(c) - 2)):
                out.append(c)
    return out


def support_count(itemset: Itemset, trees: Sequence[PTree]) -> int:
    return and_many([trees[i] for i in itemset]).root_count


def derive_rules(frequents: Iterable[FrequentItemset], config: MiningConfig,
                 catalog: ItemCatalog | None = None) -> list[AssociationRule]:
    counts: dict[Itemset, int] = {}
    n_rows = None
    for s in frequents:
        counts[s.items] = s.count
        n_rows = s.n_rows
    rules = []
    for items, count in counts.items():
        if len(items) < 2:
            continue
        for pos, d in enumerate(items):
            if not config.is_decision(d):
                continue
            antecedent = items[:pos] + items[pos + 1:]
            if config.max_antecedent is not None and len(antecedent) > config.max_antecedent:
                continue
            if catalog is not None and any(
                    catalog[i].attribute == catalog[d].attribute for i in antecedent):
                continue
            base = counts.get(antecedent)
            if base is None:
                raise MiningError(f"no count for {antecedent}, a subset of frequent {items}")
            if Fraction(count, base) >= config.minconf:
                rules.append(AssociationRule(antecedent, d, count, base, n_rows))
    rules.sort(key=rule_order)
    return rules


class _DerivedTrees:
    """Trees of the previous level's frequent itemsets, kept under a node budget."""

    def __init__(self, base: Sequence[PTree], budget: int):
        self.base = base
        self.budget = budget
        self.trees: dict[Itemset, PTree] = {}
        self.used = 0

    def offer(self, items: Itemset, tree: PTree):
        if self.used + tree.node_count <= self.budget:
            self.trees[items] = tree
            self.used += tree.node_count

    def get(self, items: Itemset) -> PTree:
        if len(items) == 1:
            return self.base[items[0]]
        t = self.trees.get(items)
        if t is None:
            t = and_many([self.base[i] for i in items])
        return t


def bf_arm(trees: Sequence[PTree], n_rows: int, config: MiningConfig,
           threads: int = 1, cache_nodes: int = DEFAULT_CACHE_NODES) -> MiningResult:
    """Mine all frequent itemsets level by level, then derive the strong rules.

    In fixed mode each declared decision attribute serves as the consequent
    while every other attribute may appear in the antecedent; free mode lets
    every attribute take the decision role in turn.  Both need the same
    frequent itemsets (two items of one attribute never co-occur), so the
    lattice is mined once and the modes differ only in the consequents
    :func:`derive_rules` accepts.
    """
    if len(trees) < 2:
        raise UsageError("need at least two items: no condition item is left for a rule")
    if config.mode == "fixed" and max(config.decision_items) >= len(trees):
        raise UsageError("decision item index out of range")
    need = config.min_count(n_rows)
    max_size = config.max_itemset_size

    level = frequent_one_itemsets(trees, n_rows, config.minsup)
    found = list(level)
    cache = _DerivedTrees(trees, cache_nodes)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        k = 1
        while level and (max_size is None or k < max_size):
            candidates = candidate_gen([s.items for s in level])
            if not candidates:
                break

            def count(c: Itemset):
                t = ptree_and(cache.get(c[:-1]), trees[c[-1]])
                n = t.root_count
                return n, (t if n >= need else None)

            results = list(pool.map(count, candidates, chunksize=64) if pool
                           else map(count, candidates))
            nxt = _DerivedTrees(trees, cache_nodes)
            level = []
            for c, (n, t) in zip(candidates, results):
                if n >= need:
                    level.append(FrequentItemset(c, n, n_rows))
                    nxt.offer(c, t)
            cache = nxt
            k += 1
            log.debug("level %d: %d candidates, %d frequent", k, len(candidates), len(level))
            found.extend(level)
    finally:
        if pool:
            pool.shutdown()

    found.sort(key=lambda s: itemset_order(s.items))
    rules = derive_rules(found, config)
    return MiningResult(n_rows, tuple(found), tuple(rules))

