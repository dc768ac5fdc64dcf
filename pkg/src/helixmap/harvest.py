"""Link-evidence collection from indexes, and link-set algebra.

Three kinds of evidence feed an interlinking study: a crawl over the
actors' own pages, an inlink index and an outlink index (the role
commercial search engines used to play). Each observation is reduced to a
directed ``source site -> target site`` record carrying provenance tags,
and records are deduplicated per (source, target) pair.

Index backends implement the small LinkIndex interface. Two adapters
ship: a local snapshot index (a directory of per-site link lists, the
only thing tests rely on) and a generic HTTP adapter for whatever
backlink service a study has access to.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import requests

from .urls import (
    GenericFilterList,
    MalformedUrl,
    ReductionFlag,
    ReductionRules,
    SiteKey,
    UnsupportedScheme,
    canonicalize,
    is_generic,
    reduce_host,
    reduce_to_site,
)

log = logging.getLogger(__name__)


class SourceTag(Enum):
    CRAWL = "Crawl"
    INLINK_INDEX = "InlinkIndex"
    OUTLINK_INDEX = "OutlinkIndex"


class Direction(Enum):
    INLINKS = "Inlinks"
    OUTLINKS = "Outlinks"


class DirectionMismatch(ValueError):
    """Attempt to merge link sets of different directions."""


class IndexUnavailable(RuntimeError):
    """The configured link index cannot be reached at all."""


@dataclass(frozen=True)
class LinkRecord:
    source: SiteKey
    target: SiteKey
    provenance: frozenset[SourceTag]
    first_seen: int

    def __post_init__(self):
        if not self.provenance:
            raise ValueError("link record without provenance")

    @property
    def key(self) -> tuple[str, str]:
        return (self.source.value, self.target.value)


class LinkSet:
    """Directed link records, at most one per (source, target) pair."""

    def __init__(self, direction: Direction, records: Iterable[LinkRecord] = ()):
        self.direction = direction
        self._records: dict[tuple[str, str], LinkRecord] = {}
        for record in records:
            self.add(record)

    def add(self, record: LinkRecord) -> None:
        existing = self._records.get(record.key)
        if existing is None:
            self._records[record.key] = record
        else:
            self._records[record.key] = LinkRecord(
                source=existing.source,
                target=existing.target,
                provenance=existing.provenance | record.provenance,
                first_seen=min(existing.first_seen, record.first_seen),
            )

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[LinkRecord]:
        return iter(self.records())

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._records

    def get(self, key: tuple[str, str]) -> LinkRecord | None:
        return self._records.get(key)

    def records(self) -> list[LinkRecord]:
        """Records sorted by (source, target) for deterministic output."""
        return [self._records[k] for k in sorted(self._records)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinkSet):
            return NotImplemented
        return self.direction == other.direction and self._records == other._records


def merge_link_sets(a: LinkSet, b: LinkSet) -> LinkSet:
    """Key-union of two same-direction link sets; provenance tags union."""
    if a.direction != b.direction:
        raise DirectionMismatch(f"{a.direction.value} vs {b.direction.value}")
    merged = LinkSet(a.direction)
    for record in a:
        merged.add(record)
    for record in b:
        merged.add(record)
    return merged


def provenance_label(tags: frozenset[SourceTag]) -> str:
    return "+".join(sorted(tag.value for tag in tags))


@dataclass
class ProvenanceReport:
    """Counts and half-up one-decimal percentages per provenance combination."""

    total: int
    rows: list[tuple[str, int, Decimal]]

    def as_dict(self) -> dict[str, tuple[int, Decimal]]:
        return {label: (count, pct) for label, count, pct in self.rows}


def provenance_report(links: LinkSet) -> ProvenanceReport:
    counts: dict[str, int] = {tag.value: 0 for tag in SourceTag}
    for record in links:
        counts.setdefault(provenance_label(record.provenance), 0)
        counts[provenance_label(record.provenance)] += 1
    total = len(links)
    rows = []
    for label in sorted(counts):
        count = counts[label]
        if total == 0:
            pct = Decimal("0.0")
        else:
            pct = (Decimal(count) * 100 / Decimal(total)).quantize(
                Decimal("0.1"), rounding=ROUND_HALF_UP
            )
        rows.append((label, count, pct))
    return ProvenanceReport(total=total, rows=rows)


# --- index adapters ---------------------------------------------------------


class LinkIndex:
    """Interface to a link-evidence backend (inlink/outlink lookups)."""

    def inlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        raise NotImplementedError

    def outlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        raise NotImplementedError


class SnapshotLinkIndex(LinkIndex):
    """Directory of per-site link lists: ``<sitekey>.in`` / ``<sitekey>.out``,
    one URL per line. A missing file means no recorded links for that site."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise IndexUnavailable(f"snapshot directory {self.directory} does not exist")

    def _read(self, site: SiteKey, suffix: str, limit: int) -> list[str]:
        path = self.directory / f"{site.value}.{suffix}"
        if not path.is_file():
            return []
        lines = [
            line.strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
        return lines[:limit]

    def inlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        return self._read(site, "in", limit)

    def outlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        return self._read(site, "out", limit)


class HttpLinkIndex(LinkIndex):
    """Generic HTTP backlink-service adapter.

    Expects ``GET <endpoint>/inlinks?site=<key>&limit=<n>`` (and
    ``/outlinks``) to return ``text/plain``, one URL per line. An optional
    bearer token covers the common auth case.
    """

    def __init__(self, endpoint: str, token: str | None = None, timeout: float = 30.0):
        if not endpoint.startswith(("http://", "https://")):
            raise IndexUnavailable(f"bad index endpoint {endpoint!r}")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._headers = {"Authorization": f"Bearer {token}"} if token else {}

    def _query(self, kind: str, site: SiteKey, limit: int) -> list[str]:
        url = f"{self.endpoint}/{kind}"
        response = requests.get(
            url,
            params={"site": site.value, "limit": str(limit)},
            headers=self._headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        return [line.strip() for line in response.text.splitlines() if line.strip()][:limit]

    def inlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        return self._query("inlinks", site, limit)

    def outlinks_of(self, site: SiteKey, limit: int) -> list[str]:
        return self._query("outlinks", site, limit)


# --- harvesting -------------------------------------------------------------


@dataclass
class HarvestResult:
    """A harvested link set plus everything that went wrong along the way."""

    links: LinkSet
    failed_sites: list[SiteKey] = field(default_factory=list)
    skipped_urls: int = 0
    flags: dict[ReductionFlag, int] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.failed_sites)


def harvest_index(
    sites: list[SiteKey],
    index: LinkIndex,
    direction: Direction,
    rules: ReductionRules,
    limit: int = 1000,
    now: int | None = None,
) -> HarvestResult:
    """Query the index for every site, reducing results to site-key records.

    Per-site failures are isolated: the failing site is recorded and the
    harvest continues. Self-pairs (source equals target after reduction)
    are retained here; the network builder removes them later.
    """
    if now is None:
        now = int(time.time())
    tag = SourceTag.INLINK_INDEX if direction is Direction.INLINKS else SourceTag.OUTLINK_INDEX
    result = HarvestResult(links=LinkSet(direction))
    for site in sites:
        try:
            if direction is Direction.INLINKS:
                urls = index.inlinks_of(site, limit)
            else:
                urls = index.outlinks_of(site, limit)
        except Exception as exc:
            log.warning("index query failed for %s: %s", site.value, exc)
            result.failed_sites.append(site)
            continue
        for raw in urls:
            reduced = _reduce_url(raw, rules)
            if reduced is None:
                result.skipped_urls += 1
                continue
            if reduced.flag is not None:
                result.flags[reduced.flag] = result.flags.get(reduced.flag, 0) + 1
            if direction is Direction.INLINKS:
                source, target = reduced.site, site
            else:
                source, target = site, reduced.site
            result.links.add(
                LinkRecord(source=source, target=target,
                           provenance=frozenset({tag}), first_seen=now)
            )
    return result


def _reduce_url(raw: str, rules: ReductionRules):
    # index dumps often list bare hosts; tolerate a missing scheme
    if "://" not in raw:
        raw = "http://" + raw
    try:
        url = canonicalize(raw)
    except (MalformedUrl, UnsupportedScheme):
        return None
    return reduce_host(url.host, rules)


def filter_generic(links: LinkSet, filter_list: GenericFilterList) -> tuple[LinkSet, int]:
    """Drop records whose source or target site is on the generic denylist."""
    kept = LinkSet(links.direction)
    dropped = 0
    for record in links:
        if is_generic(record.source, filter_list) or is_generic(record.target, filter_list):
            dropped += 1
        else:
            kept.add(record)
    return kept, dropped


# --- link-set CSV form ------------------------------------------------------

LINKSET_HEADER = ["source", "target", "provenance", "first_seen"]


def write_link_set(links: LinkSet, path: str | Path) -> None:
    """CSV form: source,target,provenance,first_seen with "+"-joined tags,
    rows sorted by (source, target)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LINKSET_HEADER)
        for record in links.records():
            writer.writerow(
                [
                    record.source.value,
                    record.target.value,
                    provenance_label(record.provenance),
                    record.first_seen,
                ]
            )


def read_link_set(path: str | Path, direction: Direction) -> LinkSet:
    links = LinkSet(direction)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LINKSET_HEADER:
            raise ValueError(f"{path}: bad link-set header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{line_no}: expected 4 fields, got {len(row)}")
            source, target, tags_text, first_seen = row
            try:
                tags = frozenset(SourceTag(t) for t in tags_text.split("+"))
                links.add(
                    LinkRecord(
                        source=SiteKey(source),
                        target=SiteKey(target),
                        provenance=tags,
                        first_seen=int(first_seen),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    return links
