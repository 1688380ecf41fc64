"""Archival coverage via TimeMaps.

A TimeMap is a datestamp-ordered list of the known archived snapshots
("mementos") of a URI, served in the RFC 5988 link format by aggregator
services that merge public web archives behind one endpoint. A resource
counts as archived as soon as it has at least one memento.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from email.utils import parsedate_to_datetime

from .auditlog import ResultsLog
from .clocks import SystemClock
from .ratelimit import HostPacer, host_of, map_by_host
from .transport import Transport, TransportError

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://timetravel.mementoweb.org/timemap/link/{uri}"
DEFAULT_PAGE_LIMIT = 10


class LinkFormatError(ValueError):
    """Malformed link-format body; ``position`` is the byte offset."""

    def __init__(self, message: str, position: int):
        super().__init__("%s (at offset %d)" % (message, position))
        self.position = position


class TimemapEntryError(ValueError):
    """A structurally valid entry that cannot become a memento."""


class TimemapFetchError(Exception):
    """The aggregator answered but not usefully (e.g. 5xx). Retryable,
    unlike the definite 'no timemap for this URI' answer."""


@dataclass
class Memento:
    uri_m: str
    datetime: datetime
    rel: list[str] = field(default_factory=list)


@dataclass
class TimeMap:
    original: str
    mementos: list[Memento] = field(default_factory=list)
    fetched_at: datetime | None = None


def parse_link_format(body: str) -> list[tuple[str, dict[str, str]]]:
    """Split a link-format body into (target, attributes) entries, in order.

    Honors quoted strings, so commas and semicolons inside attribute
    values do not split entries. Raises LinkFormatError with the offending
    offset on unbalanced brackets or quotes.
    """
    entries: list[tuple[str, dict[str, str]]] = []
    pos = 0
    n = len(body)

    def skip_ws(p: int) -> int:
        while p < n and body[p] in " \t\r\n":
            p += 1
        return p

    pos = skip_ws(pos)
    while pos < n:
        if body[pos] != "<":
            raise LinkFormatError("expected '<' to open a link target", pos)
        end = body.find(">", pos + 1)
        if end == -1:
            raise LinkFormatError("unclosed '<' in link target", pos)
        target = body[pos + 1:end]
        pos = skip_ws(end + 1)
        attrs: dict[str, str] = {}
        while pos < n and body[pos] == ";":
            pos = skip_ws(pos + 1)
            name_start = pos
            while pos < n and body[pos] not in "=;,\" \t\r\n":
                pos += 1
            name = body[name_start:pos]
            if not name:
                raise LinkFormatError("empty attribute name", name_start)
            pos = skip_ws(pos)
            value = ""
            if pos < n and body[pos] == "=":
                pos = skip_ws(pos + 1)
                if pos < n and body[pos] == '"':
                    start = pos
                    pos += 1
                    chunks = []
                    while True:
                        if pos >= n:
                            raise LinkFormatError("unclosed quote", start)
                        ch = body[pos]
                        if ch == "\\":
                            if pos + 1 >= n:
                                raise LinkFormatError("dangling escape", pos)
                            chunks.append(body[pos + 1])
                            pos += 2
                        elif ch == '"':
                            pos += 1
                            break
                        else:
                            chunks.append(ch)
                            pos += 1
                    value = "".join(chunks)
                else:
                    start = pos
                    while pos < n and body[pos] not in ";, \t\r\n":
                        pos += 1
                    value = body[start:pos]
            attrs.setdefault(name.lower(), value)
            pos = skip_ws(pos)
        entries.append((target, attrs))
        if pos < n:
            if body[pos] != ",":
                raise LinkFormatError("expected ',' between links", pos)
            pos = skip_ws(pos + 1)
            if pos >= n:
                raise LinkFormatError("trailing ',' with no link after it", n - 1)
    return entries


def serialize_link_format(entries: list[tuple[str, dict[str, str]]]) -> str:
    """Inverse of parse_link_format; attribute values always quoted."""
    parts = []
    for target, attrs in entries:
        piece = "<%s>" % target
        for name, value in attrs.items():
            escaped = value.replace("\\", "\\\\").replace('"', '\\"')
            piece += '; %s="%s"' % (name, escaped)
        parts.append(piece)
    return ",\n".join(parts)


def _rel_tokens(attrs: dict[str, str]) -> list[str]:
    return attrs.get("rel", "").split()


def _parse_memento_datetime(entry_target: str, attrs: dict[str, str]) -> datetime:
    raw = attrs.get("datetime")
    if raw is None:
        raise TimemapEntryError("memento entry <%s> has no datetime attribute"
                                % entry_target)
    try:
        dt = parsedate_to_datetime(raw)
    except (ValueError, TypeError) as exc:
        raise TimemapEntryError("memento entry <%s> has unparseable datetime %r"
                                % (entry_target, raw)) from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def timemap_from_entries(uri: str, entries: list[tuple[str, dict[str, str]]],
                         fetched_at: datetime | None = None) -> TimeMap:
    """Assemble a TimeMap; mementos re-sorted by datetime since some
    sources violate the ordering promise."""
    original = uri
    mementos = []
    for target, attrs in entries:
        rel = _rel_tokens(attrs)
        if "original" in rel:
            original = target
        if "memento" in rel:
            mementos.append(Memento(
                uri_m=target,
                datetime=_parse_memento_datetime(target, attrs),
                rel=rel,
            ))
    mementos.sort(key=lambda m: m.datetime)
    return TimeMap(original=original, mementos=mementos, fetched_at=fetched_at)


def _continuation_pages(entries: list[tuple[str, dict[str, str]]]) -> list[str]:
    return [t for t, attrs in entries if "timemap" in _rel_tokens(attrs)]


def fetch_timemap(
    uri: str,
    transport: Transport,
    endpoint_template: str = DEFAULT_ENDPOINT,
    page_limit: int = DEFAULT_PAGE_LIMIT,
    clock=None,
) -> TimeMap | None:
    """Download and parse the TimeMap for ``uri``; None when unarchived.

    A 404 (or an empty body) is the aggregator's definite "no mementos
    known" answer. Transport failures and 5xx responses raise instead —
    they say nothing about archival status. Paged timemaps are followed
    through their continuation links up to ``page_limit`` pages.
    """
    clock = clock or SystemClock()
    first_page = endpoint_template.replace("{uri}", uri)
    queue = [first_page]
    visited: set[str] = set()
    entries: list[tuple[str, dict[str, str]]] = []
    fetched_any = False
    while queue and len(visited) < page_limit:
        page = queue.pop(0)
        if page in visited:
            continue
        visited.add(page)
        resp = transport.request("GET", page)
        if resp.status == 404:
            if not fetched_any:
                return None
            continue
        if not 200 <= resp.status < 300:
            raise TimemapFetchError("timemap request for %s returned %d"
                                    % (uri, resp.status))
        body = resp.body.decode("utf-8", errors="replace")
        if not body.strip():
            if not fetched_any:
                return None
            continue
        fetched_any = True
        page_entries = parse_link_format(body)
        entries.extend(page_entries)
        for continuation in _continuation_pages(page_entries):
            if continuation not in visited:
                queue.append(continuation)
    if not fetched_any:
        return None
    return timemap_from_entries(uri, entries, fetched_at=clock.now())


def is_archived(tm: TimeMap | None) -> tuple[bool, int]:
    """Archived iff at least one memento exists; returns the count too."""
    if tm is None:
        return False, 0
    count = len(tm.mementos)
    return count >= 1, count


@dataclass
class ArchiveRound:
    round_no: int
    at: datetime
    mementos: int | None  # None: the round errored, saying nothing


@dataclass
class ArchiveVerdict:
    uri: str
    archived: bool
    mementos: int
    rounds: list[ArchiveRound] = field(default_factory=list)


def _archive_once(uri: str, transport: Transport, endpoint_template: str,
                  page_limit: int, clock) -> int | None:
    try:
        tm = fetch_timemap(uri, transport, endpoint_template=endpoint_template,
                           page_limit=page_limit, clock=clock)
    except (TransportError, TimemapFetchError) as exc:
        logger.info("archive check errored for %s: %s", uri, exc)
        return None
    _, count = is_archived(tm)
    return count


def assemble_archive_verdict(uri: str, rounds: list[ArchiveRound]) -> ArchiveVerdict:
    """Archived if any round saw a memento; unarchived only when every
    round came back empty."""
    if not rounds:
        raise ValueError("no archive rounds for %r" % uri)
    ordered = sorted(rounds, key=lambda r: r.round_no)
    best = max((r.mementos or 0) for r in ordered)
    return ArchiveVerdict(uri=uri, archived=best >= 1, mementos=best, rounds=ordered)


def archive_audit(
    uris: list[str],
    transport: Transport,
    rounds: int = 1,
    spacing: timedelta = timedelta(0),
    endpoint_template: str = DEFAULT_ENDPOINT,
    page_limit: int = DEFAULT_PAGE_LIMIT,
    clock=None,
    log: ResultsLog | None = None,
    concurrency: int = 1,
    per_host_rps: float = 0.0,
) -> dict[str, ArchiveVerdict]:
    """Check archival coverage for every URI over one or more rounds.

    Mirrors the liveness audit's mechanics: journaled rounds resume,
    outcomes in a round share its start timestamp, repeated rounds smooth
    over transient archive states.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1, got %d" % rounds)
    clock = clock or SystemClock()
    done = log.completed("archive") if log else {}
    per_uri: dict[str, list[ArchiveRound]] = {uri: [] for uri in uris}

    for (uri, round_no), record in done.items():
        if uri in per_uri and 1 <= round_no <= rounds:
            per_uri[uri].append(ArchiveRound(
                round_no=round_no,
                at=datetime.fromisoformat(record["at"]),
                mementos=record["mementos"],
            ))

    pacer = HostPacer(per_host_rps=per_host_rps, clock=clock)

    def endpoint_host(uri: str) -> str:
        return host_of(endpoint_template.replace("{uri}", uri))

    for round_no in range(1, rounds + 1):
        pending = [u for u in uris if (u, round_no) not in done]
        if pending:
            at = clock.now()
            fresh = map_by_host(
                pending,
                lambda u: _archive_once(u, transport, endpoint_template,
                                        page_limit, clock),
                host_key=endpoint_host,
                concurrency=concurrency,
                pacer=pacer,
            )
            for uri, count in fresh.items():
                per_uri[uri].append(ArchiveRound(round_no=round_no, at=at,
                                                 mementos=count))
                if log:
                    log.append_archive(uri, round_no, at, count)
        if round_no < rounds:
            clock.sleep(spacing.total_seconds())

    return {uri: assemble_archive_verdict(uri, rs) for uri, rs in per_uri.items()}
