"""Analytical outputs over a built interlinking network.

Covers the quantities a science-park link study reports: per-actor degree
tables, broker rankings, the 9x9 category cross-link matrix with totals
and per-actor means, category connectivity shares, and radius-1 ego
networks. All computations are exact integer counting; means and
percentages round half-up (one decimal for means, whole numbers for
percentages).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .network import InterlinkNetwork, Stage, StageError, degree_counts
from .registry import CATEGORY_ORDER, Registry, TableCategory


class UnclassifiedActor(ValueError):
    """A network node does not resolve to a registry actor."""


class EmptyCategory(ValueError):
    """Connectivity share requested for a category with no actors."""


class ActorNotInNetwork(ValueError):
    """Ego network requested for an actor that is not a node."""


def _half_up(numerator: int, denominator: int, places: str) -> Decimal:
    if denominator == 0:
        return Decimal(places)  # "0.0" or "0" -> zero at the right scale
    return (Decimal(numerator) / Decimal(denominator)).quantize(
        Decimal(places), rounding=ROUND_HALF_UP
    )


def _check_stage(net: InterlinkNetwork, allow_dichotomized: bool, op: str) -> None:
    if net.stage is Stage.PRUNED:
        return
    if net.stage is Stage.DICHOTOMIZED and allow_dichotomized:
        return
    raise StageError(f"{op} expects a Pruned network, got {net.stage.label}")


# --- degrees and brokers ----------------------------------------------------


@dataclass(frozen=True)
class DegreeRow:
    actor_id: str
    in_degree: int
    out_degree: int

    @property
    def total(self) -> int:
        return self.in_degree + self.out_degree


def degree_table(
    net: InterlinkNetwork, allow_dichotomized: bool = False
) -> list[DegreeRow]:
    """Per-actor degrees, ordered by total descending then actor id."""
    _check_stage(net, allow_dichotomized, "degree_table")
    degrees = degree_counts(net.edges)
    rows = [
        DegreeRow(actor_id=node, in_degree=din, out_degree=dout)
        for node, (din, dout) in ((n, degrees.get(n, (0, 0))) for n in net.nodes)
    ]
    rows.sort(key=lambda r: (-r.total, r.actor_id))
    return rows


def top_brokers(
    net: InterlinkNetwork, k: int, allow_dichotomized: bool = False
) -> list[DegreeRow]:
    """The k best-connected actors (a stable prefix of the degree table)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return degree_table(net, allow_dichotomized)[:k]


# --- category matrix --------------------------------------------------------


@dataclass
class CategoryMatrix:
    """Category-by-category directed link counts in canonical order.

    ``cells[i][j]`` counts edges from category-i actors to category-j
    actors; ``actor_counts`` is the registry population per category
    (including actors pruned from the network), which is the denominator
    of the per-actor means.
    """

    cells: list[list[int]]
    actor_counts: list[int]
    row_totals: list[int]
    col_totals: list[int]
    row_means: list[Decimal]
    col_means: list[Decimal]

    @property
    def grand_total(self) -> int:
        return sum(self.row_totals)

    @property
    def categories(self) -> tuple[TableCategory, ...]:
        return CATEGORY_ORDER


def category_matrix(net: InterlinkNetwork, reg: Registry) -> CategoryMatrix:
    """Aggregate the pruned network's edges by actor category."""
    _check_stage(net, allow_dichotomized=False, op="category_matrix")
    index = {category: i for i, category in enumerate(CATEGORY_ORDER)}
    node_category: dict[str, int] = {}
    unknown = sorted(n for n in net.nodes if reg.get(n) is None)
    if unknown:
        raise UnclassifiedActor(f"nodes missing from registry: {unknown}")
    for node in net.nodes:
        node_category[node] = index[reg.get(node).category]

    n = len(CATEGORY_ORDER)
    cells = [[0] * n for _ in range(n)]
    for source, target in net.edges:
        cells[node_category[source]][node_category[target]] += 1

    counts = reg.category_counts()
    actor_counts = [counts[c] for c in CATEGORY_ORDER]
    row_totals = [sum(row) for row in cells]
    col_totals = [sum(cells[i][j] for i in range(n)) for j in range(n)]
    row_means = [_half_up(row_totals[i], actor_counts[i], "0.0") for i in range(n)]
    col_means = [_half_up(col_totals[j], actor_counts[j], "0.0") for j in range(n)]
    return CategoryMatrix(
        cells=cells,
        actor_counts=actor_counts,
        row_totals=row_totals,
        col_totals=col_totals,
        row_means=row_means,
        col_means=col_means,
    )


OUTLINK_TOTAL_LABEL = "Total - outlinks"
INLINK_TOTAL_LABEL = "Total - inlinks"


def category_matrix_csv(matrix: CategoryMatrix) -> str:
    """Render the matrix in its tabular CSV layout.

    Leading actor-count column, one row per category, a trailing outlink
    total and mean column, and closing inlink-total and mean rows.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    names = [c.display_name for c in CATEGORY_ORDER]
    writer.writerow(["Actors", "Category", *names, OUTLINK_TOTAL_LABEL, "Mean"])
    for i, category in enumerate(CATEGORY_ORDER):
        writer.writerow(
            [
                matrix.actor_counts[i],
                category.display_name,
                *matrix.cells[i],
                matrix.row_totals[i],
                matrix.row_means[i],
            ]
        )
    writer.writerow(["", INLINK_TOTAL_LABEL, *matrix.col_totals, matrix.grand_total, ""])
    writer.writerow(["", "Mean", *matrix.col_means, "", ""])
    return buffer.getvalue()


def write_category_matrix(matrix: CategoryMatrix, path: str | Path) -> None:
    Path(path).write_text(category_matrix_csv(matrix), encoding="utf-8")


# --- connectivity and ego ---------------------------------------------------


@dataclass(frozen=True)
class ConnectivityShare:
    category: TableCategory
    connected: int
    population: int
    percent: int


def connectivity_share(
    category: TableCategory, reg: Registry, net: InterlinkNetwork
) -> ConnectivityShare:
    """How many of a category's registry actors are linked in the network.

    The denominator is the full registry population of the category, so
    actors pruned away (or never linked) count against the share.
    """
    population = reg.actors_in_category(category)
    if not population:
        raise EmptyCategory(category.value)
    degrees = degree_counts(net.edges)
    connected = sum(
        1
        for actor in population
        if actor.id in net.nodes and sum(degrees.get(actor.id, (0, 0))) > 0
    )
    percent = int(_half_up(connected * 100, len(population), "0"))
    return ConnectivityShare(
        category=category,
        connected=connected,
        population=len(population),
        percent=percent,
    )


@dataclass
class EgoNetwork:
    center: str
    neighbors: frozenset[str]
    induced_edges: dict[tuple[str, str], int]


def ego_network(net: InterlinkNetwork, actor_id: str) -> EgoNetwork:
    """The actor's direct neighbourhood, regardless of edge direction."""
    if actor_id not in net.nodes:
        raise ActorNotInNetwork(actor_id)
    neighbors = set()
    for source, target in net.edges:
        if source == actor_id and target != actor_id:
            neighbors.add(target)
        elif target == actor_id and source != actor_id:
            neighbors.add(source)
    members = neighbors | {actor_id}
    induced = {
        key: weight
        for key, weight in net.edges.items()
        if key[0] in members and key[1] in members
    }
    return EgoNetwork(center=actor_id, neighbors=frozenset(neighbors),
                      induced_edges=induced)


def ego_coverage(net: InterlinkNetwork, actor_id: str) -> tuple[int, int, int]:
    """(direct neighbours, other interconnected actors, whole percent)."""
    ego = ego_network(net, actor_id)
    others = net.node_count - 1
    percent = int(_half_up(len(ego.neighbors) * 100, others, "0")) if others else 0
    return len(ego.neighbors), others, percent
