"""Polite breadth-first crawler that collects a site's external outlinks.

The crawler walks pages under one actor site and records hyperlinks that
point at *other* sites, reduced to site keys. Only static ``a[href]`` and
``area[href]`` links are extracted; script-injected links are invisible
to it, which matches the behaviour of the desk-scale crawlers this kind
of study relies on.

Politeness contract: consecutive requests to one host are spaced by at
least the configured delay, robots.txt is honoured (including a full-site
exclusion), redirects are followed up to 5 hops with the final URL
deciding the site key, and per-page failures never abort a crawl.

A host map ("host -> address:port") lets fixtures and mirrors serve a
logical hostname from a local address, exactly like a hosts-file entry.
"""

from __future__ import annotations

import logging
import threading
import time
import urllib.robotparser
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

import requests

from . import __version__
from .harvest import Direction, LinkRecord, LinkSet, SourceTag
from .urls import (
    CanonicalUrl,
    MalformedUrl,
    ReductionRules,
    SiteKey,
    UnsupportedScheme,
    canonicalize,
    reduce_host,
)

log = logging.getLogger(__name__)

MAX_REDIRECT_HOPS = 5


@dataclass(frozen=True)
class CrawlPolicy:
    max_pages_per_site: int = 500
    max_depth: int = 3
    delay_per_host: float = 1.0
    respect_robots: bool = True
    timeout: float = 10.0
    user_agent: str = f"helixmap/{__version__}"

    def __post_init__(self):
        if self.max_pages_per_site < 1:
            raise ValueError("max_pages_per_site must be >= 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.delay_per_host < 0 or self.timeout <= 0:
            raise ValueError("delay_per_host must be >= 0 and timeout > 0")


@dataclass
class CrawlLogEntry:
    timestamp: float
    host: str
    url: str
    status: str


@dataclass
class FetchError:
    url: str
    cause: str


@dataclass
class CrawlReport:
    pages_fetched: int = 0
    errors: list[FetchError] = field(default_factory=list)
    robots_blocked: bool = False
    skipped_links: int = 0
    log: list[CrawlLogEntry] = field(default_factory=list)


@dataclass
class CrawlResult:
    links: LinkSet
    report: CrawlReport


class HostThrottle:
    """Serializes requests per host with a minimum spacing. Thread-safe."""

    def __init__(self, delay: float):
        self.delay = delay
        self._lock = threading.Lock()
        self._next_allowed: dict[str, float] = {}

    def wait(self, host: str) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                allowed = self._next_allowed.get(host, now)
                if now >= allowed:
                    self._next_allowed[host] = now + self.delay
                    return
                pause = allowed - now
            time.sleep(pause)


class _LinkCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in ("a", "area"):
            for name, value in attrs:
                if name == "href" and value:
                    self.hrefs.append(value)


def extract_hrefs(html: str) -> list[str]:
    """All a[href] / area[href] values in document order."""
    collector = _LinkCollector()
    collector.feed(html)
    return collector.hrefs


class Fetcher:
    """HTTP fetcher with manual redirect handling and host-map support."""

    def __init__(
        self,
        policy: CrawlPolicy,
        throttle: HostThrottle,
        report: CrawlReport,
        host_map: dict[str, str] | None = None,
    ):
        self.policy = policy
        self.throttle = throttle
        self.report = report
        self.host_map = host_map or {}
        self.session = requests.Session()

    def _transport_url(self, url: CanonicalUrl) -> tuple[str, dict[str, str]]:
        headers = {"User-Agent": self.policy.user_agent}
        address = self.host_map.get(url.host)
        if address is None:
            return str(url), headers
        split = urlsplit(str(url))
        headers["Host"] = url.host
        return urlunsplit((split.scheme, address, split.path, split.query, "")), headers

    def _log(self, host: str, url: str, status: str) -> None:
        self.report.log.append(
            CrawlLogEntry(timestamp=time.time(), host=host, url=url, status=status)
        )

    def fetch(self, url: CanonicalUrl) -> tuple[CanonicalUrl, str, str] | None:
        """GET one page; returns (final_url, content_type, body) or None on error.

        Follows up to MAX_REDIRECT_HOPS redirects; every hop is throttled
        and logged against its own host.
        """
        current = url
        for _ in range(MAX_REDIRECT_HOPS + 1):
            self.throttle.wait(current.host)
            transport, headers = self._transport_url(current)
            try:
                response = self.session.get(
                    transport,
                    headers=headers,
                    timeout=self.policy.timeout,
                    allow_redirects=False,
                )
            except requests.RequestException as exc:
                self._log(current.host, str(current), "error")
                self.report.errors.append(FetchError(str(current), str(exc)))
                return None
            self._log(current.host, str(current), str(response.status_code))
            if response.status_code in (301, 302, 303, 307, 308):
                location = response.headers.get("Location")
                if not location:
                    self.report.errors.append(
                        FetchError(str(current), "redirect without Location")
                    )
                    return None
                try:
                    current = canonicalize(location, base=current)
                except (MalformedUrl, UnsupportedScheme) as exc:
                    self.report.errors.append(FetchError(str(current), str(exc)))
                    return None
                continue
            if response.status_code != 200:
                self.report.errors.append(
                    FetchError(str(current), f"HTTP {response.status_code}")
                )
                return None
            content_type = response.headers.get("Content-Type", "")
            return current, content_type, response.text
        self.report.errors.append(FetchError(str(url), "too many redirects"))
        return None


def _load_robots(
    site: SiteKey, entry: CanonicalUrl, fetcher: Fetcher
) -> urllib.robotparser.RobotFileParser:
    parser = urllib.robotparser.RobotFileParser()
    robots_url = CanonicalUrl(scheme=entry.scheme, host=entry.host,
                              port=entry.port, path="/robots.txt")
    fetched = fetcher.fetch(robots_url)
    if fetched is None:
        # unreachable or missing robots: conventional allow-all
        parser.parse([])
        # the failed probe is bookkeeping, not a crawl failure
        if fetcher.report.errors:
            fetcher.report.errors.pop()
    else:
        parser.parse(fetched[2].splitlines())
    return parser


def crawl_outlinks(
    site: SiteKey,
    policy: CrawlPolicy,
    rules: ReductionRules,
    entry_url: str | None = None,
    host_map: dict[str, str] | None = None,
    throttle: HostThrottle | None = None,
    now: int | None = None,
) -> CrawlResult:
    """Crawl one actor site and collect its external outlinks as a LinkSet.

    External means the target reduces to a different site key than the
    crawled site; same-site links only feed the frontier. The returned
    report carries per-page errors, the robots verdict, and the request
    log used for politeness auditing.
    """
    if now is None:
        now = int(time.time())
    report = CrawlReport()
    links = LinkSet(Direction.OUTLINKS)
    throttle = throttle or HostThrottle(policy.delay_per_host)
    fetcher = Fetcher(policy, throttle, report, host_map)

    entry = canonicalize(entry_url or f"http://{site.value}/")
    robots = None
    if policy.respect_robots:
        robots = _load_robots(site, entry, fetcher)
        if not robots.can_fetch(policy.user_agent, str(entry)):
            report.robots_blocked = True
            report.log.append(
                CrawlLogEntry(time.time(), entry.host, str(entry), "robots")
            )
            return CrawlResult(links=links, report=report)

    queue: list[tuple[CanonicalUrl, int]] = [(entry, 0)]
    seen: set[str] = {str(entry)}

    while queue and report.pages_fetched < policy.max_pages_per_site:
        url, depth = queue.pop(0)
        if robots is not None and not robots.can_fetch(policy.user_agent, str(url)):
            report.log.append(CrawlLogEntry(time.time(), url.host, str(url), "robots"))
            continue
        report.pages_fetched += 1
        fetched = fetcher.fetch(url)
        if fetched is None:
            continue
        final_url, content_type, body = fetched

        final_site = reduce_host(final_url.host, rules).site
        if final_site != site:
            # a redirector leaving the site is itself an external link
            links.add(LinkRecord(source=site, target=final_site,
                                 provenance=frozenset({SourceTag.CRAWL}),
                                 first_seen=now))
            continue
        if "html" not in content_type.lower():
            continue

        for href in extract_hrefs(body):
            try:
                resolved = canonicalize(href, base=final_url)
            except (MalformedUrl, UnsupportedScheme):
                report.skipped_links += 1
                continue
            target_site = reduce_host(resolved.host, rules).site
            if target_site == site:
                if depth + 1 <= policy.max_depth and str(resolved) not in seen:
                    seen.add(str(resolved))
                    queue.append((resolved, depth + 1))
            else:
                links.add(LinkRecord(source=site, target=target_site,
                                     provenance=frozenset({SourceTag.CRAWL}),
                                     first_seen=now))
    return CrawlResult(links=links, report=report)


def write_crawl_log(entries: list[CrawlLogEntry], path: str | Path) -> None:
    """Line-oriented audit log: ``timestamp host url status``."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(f"{entry.timestamp:.6f} {entry.host} {entry.url} {entry.status}\n")
