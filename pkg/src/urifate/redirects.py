"""Resolve shared URIs through redirect chains and collapse aliases.

Shorteners mean several shared URIs often point at one resource; the
canonical identity of a resource is the final URI its redirect chain
lands on, lightly normalized.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from urllib.parse import urljoin, urlsplit, urlunsplit

from .clocks import SystemClock
from .transport import (
    ConnectFailure,
    DnsError,
    RequestTimeout,
    Response,
    Transport,
    TransportError,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_REDIRECTS = 20

# Failure causes recorded on a UriRecord when no terminal response was reached.
FAIL_DNS = "dns"
FAIL_TIMEOUT = "timeout"
FAIL_CONNECT = "connect"
FAIL_LOOP = "loop"
FAIL_TOO_MANY_REDIRECTS = "too_many_redirects"


@dataclass
class Hop:
    uri: str
    status: int


@dataclass
class UriRecord:
    """One URI's trip through its redirect chain.

    ``final`` is set only when a non-3xx terminal response was obtained;
    otherwise ``failure`` names why resolution stopped.
    """

    original: str
    chain: list[Hop] = field(default_factory=list)
    final: str | None = None
    resolved_at: datetime | None = None
    failure: str | None = None

    @property
    def looped(self) -> bool:
        return self.failure == FAIL_LOOP

    @property
    def terminal_status(self) -> int | None:
        if self.final is None or not self.chain:
            return None
        return self.chain[-1].status

    def to_dict(self) -> dict:
        return {
            "original": self.original,
            "chain": [[h.uri, h.status] for h in self.chain],
            "final": self.final,
            "resolved_at": self.resolved_at.isoformat() if self.resolved_at else None,
            "failure": self.failure,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UriRecord":
        return cls(
            original=d["original"],
            chain=[Hop(u, s) for u, s in d["chain"]],
            final=d["final"],
            resolved_at=datetime.fromisoformat(d["resolved_at"])
            if d["resolved_at"] else None,
            failure=d["failure"],
        )


@dataclass
class AliasGroup:
    """Original URIs that resolve to one canonical final URI."""

    final: str
    members: set[str] = field(default_factory=set)


def _request_with_fallback(transport: Transport, uri: str, method: str) -> Response:
    """HEAD first; fall back to GET when the server rejects or hangs on HEAD."""
    if method != "HEAD":
        return transport.request(method, uri)
    try:
        resp = transport.request("HEAD", uri)
    except RequestTimeout:
        return transport.request("GET", uri)
    if resp.status in (405, 501):
        return transport.request("GET", uri)
    return resp


def resolve_chain(
    uri: str,
    transport: Transport,
    max_redirects: int = DEFAULT_MAX_REDIRECTS,
    method: str = "HEAD",
    clock=None,
) -> UriRecord:
    """Follow Location headers hop by hop until a non-3xx terminal response.

    Relative Locations resolve against the current hop. A revisited URI
    flags the chain as looping; running past ``max_redirects`` follows, or
    any transport failure, leaves ``final`` absent with the cause recorded.
    """
    if max_redirects < 1:
        raise ValueError("max_redirects must be >= 1, got %d" % max_redirects)
    clock = clock or SystemClock()
    record = UriRecord(original=uri, resolved_at=clock.now())
    current = uri
    seen = {uri}
    redirects_followed = 0
    while True:
        try:
            resp = _request_with_fallback(transport, current, method)
        except DnsError:
            record.failure = FAIL_DNS
            return record
        except RequestTimeout:
            record.failure = FAIL_TIMEOUT
            return record
        except TransportError:
            record.failure = FAIL_CONNECT
            return record
        record.chain.append(Hop(current, resp.status))
        if not 300 <= resp.status < 400:
            record.final = current
            return record
        location = resp.header("Location")
        if location is None:
            # A 3xx without Location is its own terminal answer.
            record.final = current
            return record
        if redirects_followed >= max_redirects:
            record.failure = FAIL_TOO_MANY_REDIRECTS
            return record
        next_uri = urljoin(current, location.strip())
        if next_uri in seen:
            record.failure = FAIL_LOOP
            return record
        seen.add(next_uri)
        current = next_uri
        redirects_followed += 1


def normalize_uri(uri: str) -> str:
    """Conservative normalization for alias grouping.

    Lowercases scheme and host, strips default ports and the fragment;
    path and query are preserved untouched to avoid false merges.
    """
    parts = urlsplit(uri)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    if ":" in host:
        host = "[%s]" % host
    userinfo = ""
    if parts.username:
        userinfo = parts.username
        if parts.password:
            userinfo += ":" + parts.password
        userinfo += "@"
    port = ""
    try:
        raw_port = parts.port
    except ValueError:
        raw_port = None
    if raw_port is not None and raw_port != {"http": 80, "https": 443}.get(scheme):
        port = ":%d" % raw_port
    netloc = userinfo + host + port
    return urlunsplit((scheme, netloc, parts.path, parts.query, ""))


def dedupe(records: list[UriRecord]) -> list[AliasGroup]:
    """Group records by normalized final URI (normalized original when
    resolution failed, so dead URIs still count downstream as their own
    resources). Groups come out in first-seen order.

    Records must have distinct originals; resolving each shared URI once
    is the caller's job, and silently collapsing duplicates here would
    break the members-sum-to-input-count accounting.
    """
    seen_originals: set[str] = set()
    groups: dict[str, AliasGroup] = {}
    for record in records:
        if record.original in seen_originals:
            raise ValueError("duplicate original URI %r" % record.original)
        seen_originals.add(record.original)
        key = normalize_uri(record.final if record.final is not None else record.original)
        group = groups.get(key)
        if group is None:
            group = AliasGroup(final=key)
            groups[key] = group
        group.members.add(record.original)
    return list(groups.values())
