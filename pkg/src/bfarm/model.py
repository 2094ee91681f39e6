"""Result and configuration types shared by the miner and the oracle."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

Itemset = tuple[int, ...]

MODES = ("fixed", "free")


class ThresholdError(ValueError):
    pass


class UsageError(ValueError):
    pass


def parse_threshold(value) -> Fraction:
    """Parse ``"10%"``, ``"0.10"``, ``0.1`` or a Fraction into an exact fraction in (0, 1]."""
    if isinstance(value, Fraction):
        f = value
    elif isinstance(value, str):
        text = value.strip()
        try:
            f = Fraction(text[:-1].strip()) / 100 if text.endswith("%") else Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ThresholdError(f"cannot parse threshold {value!r}") from None
    elif isinstance(value, (int, float)):
        # via str so that 0.1 means one tenth, not its binary approximation
        f = Fraction(str(value))
    else:
        raise ThresholdError(f"cannot parse threshold {value!r}")
    if not 0 < f <= 1:
        raise ThresholdError(f"threshold {value!r} is outside (0, 1]")
    return f


def as_itemset(items: Iterable[int]) -> Itemset:
    s = tuple(sorted(set(items)))
    if not s:
        raise UsageError("itemsets are non-empty")
    return s


@dataclass(frozen=True)
class MiningConfig:
    minsup: Fraction
    minconf: Fraction
    mode: str = "fixed"
    decision_items: frozenset[int] = frozenset()
    max_antecedent: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "minsup", parse_threshold(self.minsup))
        object.__setattr__(self, "minconf", parse_threshold(self.minconf))
        object.__setattr__(self, "decision_items", frozenset(self.decision_items))
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed" and not self.decision_items:
            raise UsageError("fixed mode needs at least one decision item")
        if self.max_antecedent is not None and self.max_antecedent < 1:
            raise UsageError("max_antecedent must be >= 1")

    def is_decision(self, item: int) -> bool:
        return self.mode == "free" or item in self.decision_items

    @property
    def max_itemset_size(self) -> int | None:
        return None if self.max_antecedent is None else self.max_antecedent + 1

    def min_count(self, n_rows: int) -> int:
        """Smallest row count whose support reaches ``minsup``."""
        num, den = self.minsup.numerator, self.minsup.denominator
        return -(-num * n_rows // den)


@dataclass(frozen=True, order=True)
class FrequentItemset:
    items: Itemset
    count: int
    n_rows: int = field(compare=False)

    @property
    def support(self) -> Fraction:
        return Fraction(self.count, self.n_rows)


@dataclass(frozen=True)
class AssociationRule:
    antecedent: Itemset
    consequent: int
    count: int              # rows holding antecedent and consequent
    antecedent_count: int
    n_rows: int

    @property
    def support(self) -> Fraction:
        return Fraction(self.count, self.n_rows)

    @property
    def confidence(self) -> Fraction:
        return Fraction(self.count, self.antecedent_count)

    @property
    def key(self) -> tuple:
        return (self.antecedent, self.consequent)


def itemset_order(items: Itemset):
    return (len(items), items)


def rule_order(rule: AssociationRule):
    return (rule.consequent, len(rule.antecedent), rule.antecedent)
