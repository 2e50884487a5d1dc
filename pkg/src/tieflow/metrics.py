"""Partition quality and student behavior indicators.

Modularity follows the directed-weighted form: observed intra-community
weight minus the out-strength/in-strength null expectation, normalized by
total weight. A symmetrized undirected variant is available for comparison
with undirected baselines.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .events import EventLog, TimeRange

if TYPE_CHECKING:  # circular at runtime only
    from .ifs import CommunityAssignment
    from .tiedecay import NetworkSnapshot

INDICATORS = (
    "amount",
    "times",
    "days",
    "bath_entropy",
    "breakfast_entropy",
    "lunch_entropy",
    "dinner_entropy",
)

LOCATION_CATEGORIES = ("dining", "bath", "shop", "other")


@dataclass(frozen=True)
class PartitionReport:
    modularity: float
    community_count: int
    avg_size: float  # labeled nodes / community_count, 0 when no communities
    isolated_count: int


@dataclass(frozen=True)
class BehaviorProfile:
    total_amount: float
    event_count: int
    active_days: int
    bath_entropy: float
    breakfast_entropy: float
    lunch_entropy: float
    dinner_entropy: float
    shop_entropy: float

    def indicator(self, name: str) -> float:
        if name == "amount":
            return self.total_amount
        if name == "times":
            return float(self.event_count)
        if name == "days":
            return float(self.active_days)
        return getattr(self, name)


@dataclass(frozen=True)
class SlotScheme:
    """Day-slot binning for behavioral entropy.

    Meal windows are half-open hour ranges of the UTC day; a meal's entropy
    is taken over the hourly slots inside its window. Bath and shop entropy
    use day-of-week slots (7 bins).
    """

    breakfast: tuple[int, int] = (5, 10)
    lunch: tuple[int, int] = (10, 15)
    dinner: tuple[int, int] = (15, 22)

    def meal_of(self, hour: int) -> str | None:
        for name in ("breakfast", "lunch", "dinner"):
            start, end = getattr(self, name)
            if start <= hour < end:
                return name
        return None


def modularity(s: "NetworkSnapshot", a: "CommunityAssignment", directed: bool = True) -> float:
    """Partition quality on the snapshot; labeled node pairs only.

    directed=False symmetrizes the adjacency first (w_ij + w_ji) and uses
    the classic undirected weighted form.
    """
    matrix = s.matrix.tocsr()
    if not directed:
        matrix = (matrix + matrix.T).tocsr()
    total = float(matrix.sum())
    if total <= 0:
        raise ValueError("snapshot has zero total weight")
    out_strength = np.asarray(matrix.sum(axis=1)).ravel()
    in_strength = np.asarray(matrix.sum(axis=0)).ravel()

    index = {node: i for i, node in enumerate(s.nodes)}
    members: dict[int, list[int]] = defaultdict(list)
    for node, label in a.labels.items():
        members[label].append(index[node])

    q = 0.0
    for rows in members.values():
        idx = np.array(sorted(rows), dtype=np.intp)
        q += float(matrix[idx][:, idx].sum()) / total
        q -= float(out_strength[idx].sum()) * float(in_strength[idx].sum()) / (total * total)
    return q


def partition_report(
    s: "NetworkSnapshot", a: "CommunityAssignment", directed: bool = True
) -> PartitionReport:
    community_count = len(set(a.labels.values()))
    labeled = len(a.labels)
    return PartitionReport(
        modularity=modularity(s, a, directed=directed),
        community_count=community_count,
        avg_size=labeled / community_count if community_count else 0.0,
        isolated_count=len(a.isolated),
    )


def shannon_entropy(counts: Mapping | Counter) -> float:
    """Natural-log entropy of an empirical count distribution."""
    total = sum(counts.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in counts.values():
        if count > 0:
            p = count / total
            entropy -= p * math.log(p)
    return entropy


def behavior_profiles(
    log: EventLog,
    category_map: Mapping[str, str],
    semester: TimeRange,
    scheme: SlotScheme = SlotScheme(),
) -> dict[str, BehaviorProfile]:
    """Aggregate spend behavior per student over the semester.

    Meal entropies bin a student's dining events by hour-of-day inside each
    meal window; bath and shop entropies bin by day of week. Point-mass
    distributions give entropy 0 (perfectly regular behavior).
    """
    missing = log.locations - set(category_map)
    if missing:
        raise ValueError(f"category_map missing locations: {sorted(missing)[:5]}")
    bad = set(category_map.values()) - set(LOCATION_CATEGORIES)
    if bad:
        raise ValueError(f"unknown location categories: {sorted(bad)}")

    amounts: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    days: dict[str, set[int]] = defaultdict(set)
    slot_counts: dict[tuple[str, str], Counter] = defaultdict(Counter)

    for r in log.records:
        if r.kind != "spend" or not semester.contains(r.timestamp):
            continue
        student = r.student_id
        amounts[student] += r.amount
        counts[student] += 1
        days[student].add(r.timestamp // 86400)
        category = category_map[r.location_id]
        moment = datetime.fromtimestamp(r.timestamp, tz=timezone.utc)
        if category == "dining":
            meal = scheme.meal_of(moment.hour)
            if meal is not None:
                slot_counts[(student, meal)][moment.hour] += 1
        elif category in ("bath", "shop"):
            slot_counts[(student, category)][moment.weekday()] += 1

    profiles = {}
    for student in sorted(log.students):
        profiles[student] = BehaviorProfile(
            total_amount=amounts[student],
            event_count=counts[student],
            active_days=len(days[student]),
            bath_entropy=shannon_entropy(slot_counts[(student, "bath")]),
            breakfast_entropy=shannon_entropy(slot_counts[(student, "breakfast")]),
            lunch_entropy=shannon_entropy(slot_counts[(student, "lunch")]),
            dinner_entropy=shannon_entropy(slot_counts[(student, "dinner")]),
            shop_entropy=shannon_entropy(slot_counts[(student, "shop")]),
        )
    return profiles


def _population_variance(values: list[float]) -> float:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.var())  # ddof=0: population variance


def variance_comparison(
    profiles: Mapping[str, BehaviorProfile], a: "CommunityAssignment"
) -> dict[str, tuple[float, float]]:
    """Per indicator: (variance over all students, mean within-community variance).

    Communities need at least two profiled members to contribute; if none
    qualify the within column is NaN.
    """
    members: dict[int, list[str]] = defaultdict(list)
    for node, label in a.labels.items():
        if node in profiles:
            members[label].append(node)
    eligible = [nodes for nodes in members.values() if len(nodes) >= 2]

    table = {}
    for name in INDICATORS:
        everyone = [profile.indicator(name) for profile in profiles.values()]
        variance_all = _population_variance(everyone)
        if eligible:
            within = [
                _population_variance([profiles[node].indicator(name) for node in nodes])
                for nodes in eligible
            ]
            mean_within = float(np.mean(within))
        else:
            mean_within = float("nan")
        table[name] = (variance_all, mean_within)
    return table
