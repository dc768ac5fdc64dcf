"""URL canonicalization and actor-level site reduction.

Link harvesting produces raw URL strings from crawls and link indexes.
Before they can be counted they are normalized into a canonical form and
then reduced to a *site key*: the registrable domain of the host (e.g.
``wlv.ac.uk``), or a configured sub-domain when a study keeps the
sub-sites of one registrable domain apart (e.g. ``cybermetrics.wlv.ac.uk``).

Canonicalization rules:

- only ``http``/``https`` URLs are accepted; everything else (``mailto:``,
  ``data:``, userinfo URLs) is rejected,
- scheme and host are lowercased; non-ASCII hosts are converted to punycode,
- default ports are dropped, fragments are removed,
- dot segments (``./``, ``../``) are resolved out of the path,
- ``www.`` is never special-cased: it disappears only through registrable
  domain reduction.

Reduction follows the public-suffix longest-match algorithm against a
versioned suffix snapshot. Hosts that cannot be reduced cleanly (IP
literals, hosts with no matching suffix rule) are kept and flagged rather
than dropped, so the analyst decides their fate.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from urllib.parse import urljoin, urlsplit


class MalformedUrl(ValueError):
    """Raised for URL strings that cannot be parsed into a canonical form."""


class UnsupportedScheme(ValueError):
    """Raised for parseable URLs whose scheme is not http or https."""


_ALLOWED_SCHEMES = ("http", "https")
_DEFAULT_PORTS = {"http": 80, "https": 443}


@dataclass(frozen=True)
class CanonicalUrl:
    """A normalized http(s) URL: lowercase scheme/host, clean path, no fragment."""

    scheme: str
    host: str
    port: int | None
    path: str
    query: str | None = None

    def __str__(self) -> str:
        host = f"[{self.host}]" if ":" in self.host else self.host
        port = f":{self.port}" if self.port is not None else ""
        query = f"?{self.query}" if self.query is not None else ""
        return f"{self.scheme}://{host}{port}{self.path}{query}"


class SiteLevel(Enum):
    REGISTRABLE_DOMAIN = "RegistrableDomain"
    SUBDOMAIN = "Subdomain"


@dataclass(frozen=True, order=True)
class SiteKey:
    """An actor-level web identity: a registrable domain or a kept sub-domain."""

    value: str
    level: SiteLevel = field(default=SiteLevel.REGISTRABLE_DOMAIN, compare=False)


class ReductionFlag(Enum):
    """Why a host could not be reduced cleanly (kept anyway, flagged)."""

    IP_LITERAL = "ip-literal"
    UNKNOWN_SUFFIX = "unknown-suffix"


@dataclass(frozen=True)
class Reduction:
    """Result of reducing one host: the site key plus an optional flag."""

    site: SiteKey
    flag: ReductionFlag | None = None


class ReductionRules:
    """Public-suffix snapshot plus the set of sub-domain exception domains.

    The suffix snapshot uses the standard one-rule-per-line text form:
    ``//`` comments, ``*`` wildcard labels, ``!`` exception rules. The
    sub-domain exception file lists one registrable domain per line whose
    sub-domains are to be kept as distinct site keys.
    """

    def __init__(self, suffix_text: str, subdomain_exceptions: set[str] | None = None):
        self.version = "unversioned"
        self._exact: set[tuple[str, ...]] = set()
        self._wildcards: set[tuple[str, ...]] = set()
        self._exceptions: set[tuple[str, ...]] = set()
        for line in suffix_text.splitlines():
            line = line.strip()
            if line.startswith("//"):
                comment = line[2:].strip()
                if comment.upper().startswith("VERSION:"):
                    self.version = comment.split(":", 1)[1].strip()
                continue
            if not line:
                continue
            rule = line.split()[0].lower()
            if rule.startswith("!"):
                self._exceptions.add(tuple(rule[1:].split(".")))
            elif rule.startswith("*."):
                self._wildcards.add(tuple(rule.split(".")))
            else:
                self._exact.add(tuple(rule.split(".")))
        if not (self._exact or self._wildcards):
            raise ValueError("suffix snapshot contains no rules")

        self.subdomain_exceptions = frozenset(subdomain_exceptions or ())
        for domain in self.subdomain_exceptions:
            reduced = self.registrable_domain(domain)
            if reduced != domain:
                raise ValueError(
                    f"subdomain exception {domain!r} is not a registrable domain"
                )

    @classmethod
    def from_files(
        cls, suffix_path: str | Path, exceptions_path: str | Path | None = None
    ) -> "ReductionRules":
        suffix_text = Path(suffix_path).read_text(encoding="utf-8")
        exceptions: set[str] = set()
        if exceptions_path is not None:
            for line in Path(exceptions_path).read_text(encoding="utf-8").splitlines():
                line = line.split("#", 1)[0].strip().lower()
                if line:
                    exceptions.add(line)
        return cls(suffix_text, exceptions)

    @classmethod
    def bundled(cls, subdomain_exceptions: set[str] | None = None) -> "ReductionRules":
        """Rules backed by the suffix snapshot shipped with the package."""
        text = (
            resources.files("helixmap.data")
            .joinpath("public_suffix_snapshot.dat")
            .read_text(encoding="utf-8")
        )
        return cls(text, subdomain_exceptions)

    def public_suffix(self, host: str) -> str | None:
        """Longest-match public suffix of ``host``, or None if no rule matches."""
        labels = tuple(host.split("."))
        best: tuple[str, ...] | None = None
        for rule in self._exceptions:
            if self._rule_matches(rule, labels):
                # an exception rule wins outright; its suffix drops the left label
                return ".".join(rule[1:])
        for rule in self._exact | self._wildcards:
            if self._rule_matches(rule, labels):
                if best is None or len(rule) > len(best):
                    best = rule
        if best is None:
            return None
        return ".".join(labels[len(labels) - len(best):])

    @staticmethod
    def _rule_matches(rule: tuple[str, ...], labels: tuple[str, ...]) -> bool:
        if len(rule) > len(labels):
            return False
        for rule_label, host_label in zip(reversed(rule), reversed(labels)):
            if rule_label != "*" and rule_label != host_label:
                return False
        return True

    def registrable_domain(self, host: str) -> str | None:
        """Suffix plus one label, or None when no suffix rule matches.

        ``None`` also covers hosts that *are* a public suffix (no registrable
        part exists).
        """
        suffix = self.public_suffix(host)
        if suffix is None:
            return None
        suffix_len = len(suffix.split("."))
        labels = host.split(".")
        if len(labels) <= suffix_len:
            return None
        return ".".join(labels[len(labels) - suffix_len - 1:])


def canonicalize(raw: str, base: CanonicalUrl | None = None) -> CanonicalUrl:
    """Parse and normalize a URL string, resolving it against ``base`` if relative.

    Raises MalformedUrl for unparseable input (or a relative reference with
    no base) and UnsupportedScheme for non-http(s) schemes. Idempotent:
    canonicalizing the rendering of a canonical URL returns an equal value.
    """
    if raw is None or not raw.strip():
        raise MalformedUrl("empty URL")
    raw = raw.strip()

    try:
        split = urlsplit(raw)
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL {raw!r}: {exc}") from exc

    if split.scheme and split.scheme.lower() not in _ALLOWED_SCHEMES:
        raise UnsupportedScheme(f"unsupported scheme {split.scheme!r} in {raw!r}")
    if split.scheme and not split.netloc:
        raise MalformedUrl(f"missing host in {raw!r}")

    if not split.scheme:
        if base is None:
            raise MalformedUrl(f"relative URL {raw!r} without a base")
        try:
            split = urlsplit(urljoin(str(base), raw))
        except ValueError as exc:
            raise MalformedUrl(f"cannot resolve {raw!r} against {base}: {exc}") from exc

    scheme = split.scheme.lower()
    if scheme not in _ALLOWED_SCHEMES:
        raise UnsupportedScheme(f"unsupported scheme {scheme!r} in {raw!r}")
    if split.username is not None or split.password is not None:
        raise MalformedUrl(f"userinfo is not supported: {raw!r}")

    try:
        host = split.hostname
        port = split.port
    except ValueError as exc:
        raise MalformedUrl(f"bad host/port in {raw!r}: {exc}") from exc
    if not host:
        raise MalformedUrl(f"empty host in {raw!r}")
    host = _normalize_host(host, raw)

    if port == _DEFAULT_PORTS[scheme]:
        port = None

    path = _remove_dot_segments(split.path or "/")
    if not path.startswith("/"):
        path = "/" + path

    query = split.query if split.query else None
    return CanonicalUrl(scheme=scheme, host=host, port=port, path=path, query=query)


def _normalize_host(host: str, raw: str) -> str:
    host = host.rstrip(".").lower()
    if not host:
        raise MalformedUrl(f"empty host in {raw!r}")
    if ":" in host:
        # bracketed IPv6 literal; urlsplit has stripped the brackets
        try:
            ipaddress.ip_address(host)
        except ValueError as exc:
            raise MalformedUrl(f"bad IPv6 literal in {raw!r}") from exc
        return host
    if any(not label for label in host.split(".")):
        raise MalformedUrl(f"empty host label in {raw!r}")
    if not host.isascii():
        try:
            host = host.encode("idna").decode("ascii")
        except UnicodeError as exc:
            raise MalformedUrl(f"cannot encode IDN host in {raw!r}") from exc
    return host


def _remove_dot_segments(path: str) -> str:
    # RFC 3986 section 5.2.4
    output: list[str] = []
    while path:
        if path.startswith("../"):
            path = path[3:]
        elif path.startswith("./"):
            path = path[2:]
        elif path.startswith("/./"):
            path = "/" + path[3:]
        elif path == "/.":
            path = "/"
        elif path.startswith("/../"):
            path = "/" + path[4:]
            if output:
                output.pop()
        elif path == "/..":
            path = "/"
            if output:
                output.pop()
        elif path in (".", ".."):
            path = ""
        else:
            cut = path.find("/", 1)
            if cut == -1:
                output.append(path)
                path = ""
            else:
                output.append(path[:cut])
                path = path[cut:]
    return "".join(output)


def _is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
    except ValueError:
        return False
    return True


def reduce_host(host: str, rules: ReductionRules) -> Reduction:
    """Reduce one lowercase host name to its site key.

    IP literals and hosts with no matching suffix rule are retained and
    flagged; for unknown suffixes the fallback key is the last two labels.
    """
    if _is_ip_literal(host):
        return Reduction(SiteKey(host), ReductionFlag.IP_LITERAL)

    registrable = rules.registrable_domain(host)
    if registrable is None:
        labels = host.split(".")
        fallback = ".".join(labels[-2:])
        return Reduction(SiteKey(fallback), ReductionFlag.UNKNOWN_SUFFIX)

    if registrable in rules.subdomain_exceptions and host != registrable:
        reg_len = len(registrable.split("."))
        labels = host.split(".")
        kept = ".".join(labels[len(labels) - reg_len - 1:])
        return Reduction(SiteKey(kept, SiteLevel.SUBDOMAIN))
    return Reduction(SiteKey(registrable))


def reduce_to_site(url: CanonicalUrl, rules: ReductionRules) -> SiteKey:
    """Reduce a canonical URL to the site key of the actor that owns it."""
    return reduce_host(url.host, rules).site


@dataclass(frozen=True)
class GenericFilterList:
    """Denylist of generic sites (search engines, portals, social networks,
    tourist information, public transport) excluded from actor networks."""

    entries: frozenset[str]
    version: str = "unversioned"

    def __post_init__(self):
        bad = [e for e in self.entries if e != e.lower() or not e]
        if bad:
            raise ValueError(f"filter entries must be lowercase: {sorted(bad)}")

    @classmethod
    def from_text(cls, text: str) -> "GenericFilterList":
        version = "unversioned"
        entries = set()
        for line in text.splitlines():
            stripped = line.strip()
            if stripped.startswith("#"):
                comment = stripped[1:].strip()
                if comment.upper().startswith("VERSION:"):
                    version = comment.split(":", 1)[1].strip()
                continue
            stripped = stripped.split("#", 1)[0].strip()
            if stripped:
                entries.add(stripped.lower())
        return cls(entries=frozenset(entries), version=version)

    @classmethod
    def from_file(cls, path: str | Path) -> "GenericFilterList":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def bundled(cls) -> "GenericFilterList":
        text = (
            resources.files("helixmap.data")
            .joinpath("generic_filter_default.txt")
            .read_text(encoding="utf-8")
        )
        return cls.from_text(text)


def is_generic(site: SiteKey, filter_list: GenericFilterList) -> bool:
    """True iff the site key exactly matches a denylist entry."""
    return site.value in filter_list.entries
