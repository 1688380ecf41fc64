"""Classify canonical URIs as available or missing on the live web.

A URI is available only if some audit round ultimately reached a 200-class
response that is a real representation (soft-404s masquerade as 200).
Everything else — 4xx/5xx, endless redirects, DNS failure, timeouts,
silence — is a flavor of missing, and a URI is declared missing only after
every round failed, so transient errors are forgiven.
"""
from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from urllib.parse import urlsplit, urlunsplit

from .auditlog import ResultsLog
from .clocks import SystemClock
from .ratelimit import HostPacer, host_of, map_by_host
from .redirects import (
    FAIL_CONNECT,
    FAIL_DNS,
    FAIL_LOOP,
    FAIL_TIMEOUT,
    FAIL_TOO_MANY_REDIRECTS,
    UriRecord,
    resolve_chain,
)
from .transport import Transport, TransportError

logger = logging.getLogger(__name__)

AVAILABLE = "available"
MISSING = "missing"

# Reason kinds, exactly one per raw outcome.
OK = "ok"
SOFT404 = "soft404"
HTTP_4XX = "http4xx"
HTTP_5XX = "http5xx"
REDIRECT_LOOP = "redirect_loop"
DNS_FAILURE = "dns_failure"
TIMEOUT = "timeout"
NO_RESPONSE = "no_response"

REASON_KINDS = (OK, SOFT404, HTTP_4XX, HTTP_5XX, REDIRECT_LOOP,
                DNS_FAILURE, TIMEOUT, NO_RESPONSE)

SOFT404_THRESHOLD = 0.9
SOFT404_SHINGLE_WORDS = 4
SOFT404_BODY_CAP = 512 * 1024
PROBE_TOKEN_LENGTH = 24

DEFAULT_ROUNDS = 3
DEFAULT_SPACING = timedelta(hours=48)


@dataclass(frozen=True)
class Reason:
    kind: str
    code: int | None = None

    def __post_init__(self):
        if self.kind not in REASON_KINDS:
            raise ValueError("unknown reason kind %r" % self.kind)

    @property
    def is_success(self) -> bool:
        return self.kind == OK


@dataclass
class RoundOutcome:
    round_no: int
    at: datetime
    reason: Reason
    final: str | None = None


@dataclass
class LivenessVerdict:
    uri: str
    status: str
    reason: Reason
    rounds: list[RoundOutcome] = field(default_factory=list)


def reason_for(record: UriRecord) -> Reason:
    """Map a resolution outcome to exactly one reason. Total: every
    possible UriRecord lands in one branch."""
    if record.failure is not None:
        if record.failure == FAIL_DNS:
            return Reason(DNS_FAILURE)
        if record.failure == FAIL_TIMEOUT:
            return Reason(TIMEOUT)
        if record.failure in (FAIL_LOOP, FAIL_TOO_MANY_REDIRECTS):
            return Reason(REDIRECT_LOOP)
        # FAIL_CONNECT and anything a future transport invents.
        return Reason(NO_RESPONSE)
    status = record.terminal_status
    if status is None:
        return Reason(NO_RESPONSE)
    if 200 <= status < 300:
        return Reason(OK)
    if 300 <= status < 400:
        # Terminal 3xx only happens without a Location to follow.
        return Reason(REDIRECT_LOOP)
    if 400 <= status < 500:
        return Reason(HTTP_4XX, status)
    if 500 <= status < 600:
        return Reason(HTTP_5XX, status)
    return Reason(NO_RESPONSE)


def classify_once(uri: str, transport: Transport, max_redirects: int = 20,
                  clock=None) -> tuple[Reason, UriRecord]:
    """One fresh resolution of ``uri`` mapped to a reason.

    A 200 answer here is provisional: the soft-404 probe may still demote
    it. Chains are re-followed from scratch on purpose — shortener targets
    drift, and what matters is what the URI ultimately returns today.
    """
    record = resolve_chain(uri, transport, max_redirects=max_redirects, clock=clock)
    return reason_for(record), record


_WORD_RE = re.compile(r"\S+")


def _shingles(body: bytes, size: int = SOFT404_SHINGLE_WORDS) -> set[tuple[str, ...]]:
    text = body[:SOFT404_BODY_CAP].decode("utf-8", errors="replace").lower()
    words = _WORD_RE.findall(text)
    if not words:
        return set()
    if len(words) < size:
        return {tuple(words)}
    return {tuple(words[i:i + size]) for i in range(len(words) - size + 1)}


def shingle_similarity(body_a: bytes, body_b: bytes,
                       size: int = SOFT404_SHINGLE_WORDS) -> float:
    """Jaccard similarity over word shingles; two empty bodies count as identical."""
    a, b = _shingles(body_a, size), _shingles(body_b, size)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def probe_token(uri: str, length: int = PROBE_TOKEN_LENGTH) -> str:
    """Path token that almost surely does not exist on the server.

    Derived from the target URI instead of drawn fresh so record/replay
    fixtures can pre-record the probe's response.
    """
    return hashlib.sha256(uri.encode("utf-8")).hexdigest()[:length]


def probe_uri(uri: str) -> str:
    """Sibling URI in the same directory with the probe token as its name."""
    parts = urlsplit(uri)
    directory = parts.path.rsplit("/", 1)[0] if "/" in parts.path else ""
    path = "%s/%s" % (directory, probe_token(uri))
    return urlunsplit((parts.scheme, parts.netloc, path, "", ""))


def detect_soft404(uri: str, transport: Transport,
                   threshold: float = SOFT404_THRESHOLD) -> bool:
    """Flag a 200 page that is really a disguised error page.

    Fetches the page, then a sibling path that cannot exist; when the
    server happily returns 200 for both and the bodies are near-identical,
    the 200 is not a representation of the resource. Probe failures leave
    the page unflagged — the check must never demote a page it could not
    test.
    """
    try:
        original = transport.request("GET", uri)
    except TransportError as exc:
        logger.info("soft-404 check skipped for %s: %s", uri, exc)
        return False
    if original.status != 200:
        return False
    try:
        probe = transport.request("GET", probe_uri(uri))
    except TransportError as exc:
        logger.info("soft-404 probe failed for %s: %s", uri, exc)
        return False
    if probe.status != 200:
        return False
    similarity = shingle_similarity(original.body, probe.body)
    if similarity >= threshold:
        logger.info("soft-404: %s (probe similarity %.3f)", uri, similarity)
        return True
    return False


def assemble_verdict(uri: str, outcomes: list[RoundOutcome]) -> LivenessVerdict:
    """Reduce per-round outcomes to one verdict, order-independently.

    Available if any round succeeded; missing only when every round
    failed, with the reason taken from the last round.
    """
    if not outcomes:
        raise ValueError("no round outcomes for %r" % uri)
    ordered = sorted(outcomes, key=lambda o: o.round_no)
    if any(o.reason.is_success for o in ordered):
        return LivenessVerdict(uri=uri, status=AVAILABLE, reason=Reason(OK),
                               rounds=ordered)
    return LivenessVerdict(uri=uri, status=MISSING, reason=ordered[-1].reason,
                           rounds=ordered)


def _audit_one(uri: str, transport: Transport, round_no: int, at: datetime,
               max_redirects: int, soft404: bool, threshold: float,
               clock) -> RoundOutcome:
    reason, record = classify_once(uri, transport, max_redirects=max_redirects,
                                   clock=clock)
    if reason.is_success and soft404 and detect_soft404(
            record.final or uri, transport, threshold=threshold):
        reason = Reason(SOFT404)
    return RoundOutcome(round_no=round_no, at=at, reason=reason,
                        final=record.final)


def audit_rounds(
    uris: list[str],
    transport: Transport,
    rounds: int = DEFAULT_ROUNDS,
    spacing: timedelta = DEFAULT_SPACING,
    clock=None,
    log: ResultsLog | None = None,
    concurrency: int = 1,
    per_host_rps: float = 0.0,
    max_redirects: int = 20,
    soft404: bool = True,
    soft404_threshold: float = SOFT404_THRESHOLD,
) -> dict[str, LivenessVerdict]:
    """Audit every URI over several spaced rounds and reduce to verdicts.

    With a results log, rounds already journaled are not re-requested, so
    interrupted audits resume where they stopped. All outcomes in a round
    share the round's start timestamp, which keeps concurrent runs
    deterministic under a virtual clock.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1, got %d" % rounds)
    clock = clock or SystemClock()
    done: dict[tuple[str, int], dict] = log.completed("live") if log else {}
    outcomes: dict[str, list[RoundOutcome]] = {uri: [] for uri in uris}

    for (uri, round_no), record in done.items():
        if uri in outcomes and 1 <= round_no <= rounds:
            outcomes[uri].append(RoundOutcome(
                round_no=round_no,
                at=datetime.fromisoformat(record["at"]),
                reason=Reason(record["reason"], record.get("code")),
            ))

    pacer = HostPacer(per_host_rps=per_host_rps, clock=clock)
    for round_no in range(1, rounds + 1):
        pending = [u for u in uris if (u, round_no) not in done]
        if pending:
            at = clock.now()
            fresh = map_by_host(
                pending,
                lambda u: _audit_one(u, transport, round_no, at, max_redirects,
                                     soft404, soft404_threshold, clock),
                host_key=host_of,
                concurrency=concurrency,
                pacer=pacer,
            )
            for uri, outcome in fresh.items():
                outcomes[uri].append(outcome)
                if log:
                    log.append_live(uri, round_no, at, outcome.reason.kind,
                                    outcome.reason.code)
        if round_no < rounds:
            clock.sleep(spacing.total_seconds())

    return {uri: assemble_verdict(uri, per_uri) for uri, per_uri in outcomes.items()}
