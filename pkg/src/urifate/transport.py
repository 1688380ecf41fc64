"""Pluggable single-request HTTP transports.

A transport executes exactly one HTTP request (no redirect following —
redirect chains are walked hop by hop upstream) and either returns a
Response or raises a TransportError. Two implementations ship: live HTTP
on top of requests, and a record/replay store for deterministic runs.

Replay store on-disk format (stable, hand-editable JSON):

    {
      "entries": [
        {"uri": "http://sh.example/a", "status": 301,
         "headers": {"Location": "http://news.example/item1"}},
        {"uri": "http://news.example/item1", "status": 200,
         "body": "<html>...</html>"},
        {"uri": "http://dead.example/x", "error": "dns"},
        {"uri": "http://news.example/", "match": "prefix", "status": 404,
         "body": "not found"}
      ]
    }

Entry fields: "uri" (required); "method" ("*" by default, or "GET"/"HEAD");
"match" ("exact" by default, or "prefix"); either "error" (one of "dns",
"timeout", "connect") or "status" with optional "headers" and "body"
("body_base64" for binary). Lookup prefers an exact match, then the
longest matching prefix entry; method-specific entries win over "*".
"""
from __future__ import annotations

import base64
import json
import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

DEFAULT_USER_AGENT = "urifate/0.1 (+https://example.invalid/urifate)"


class TransportError(Exception):
    """A request failed before an HTTP status was obtained."""


class DnsError(TransportError):
    pass


class RequestTimeout(TransportError):
    pass


class ConnectFailure(TransportError):
    pass


class ReplayMiss(KeyError):
    """No recorded response for a request. Deliberately *not* a
    TransportError: a gap in the store is a fixture bug, not a dead host,
    and must abort the run naming the URI."""

    def __init__(self, method: str, uri: str):
        super().__init__(uri)
        self.method = method
        self.uri = uri

    def __str__(self) -> str:
        return "no replay entry for %s %s" % (self.method, self.uri)


@dataclass
class Response:
    status: int
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes = b""
    url: str = ""

    def header(self, name: str) -> str | None:
        lname = name.lower()
        for key, value in self.headers.items():
            if key.lower() == lname:
                return value
        return None


class Transport(Protocol):
    def request(self, method: str, uri: str) -> Response: ...


class LiveTransport:
    """Real HTTP, one request per call, redirects not followed.

    Sessions are per-thread so concurrent resolutions can share one
    transport instance.
    """

    def __init__(self, timeout: float = 30.0, user_agent: str = DEFAULT_USER_AGENT,
                 verify: bool = True, body_cap: int = 1024 * 1024):
        self.timeout = timeout
        self.user_agent = user_agent
        self.verify = verify
        self.body_cap = body_cap
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            session.headers["User-Agent"] = self.user_agent
            self._local.session = session
        return session

    def request(self, method: str, uri: str) -> Response:
        try:
            resp = self._session().request(
                method, uri, allow_redirects=False,
                timeout=self.timeout, verify=self.verify, stream=True,
            )
            try:
                body = b"" if method == "HEAD" else resp.raw.read(
                    self.body_cap, decode_content=True)
            finally:
                resp.close()
        except requests.exceptions.Timeout as exc:
            raise RequestTimeout(str(exc)) from exc
        except requests.exceptions.ConnectionError as exc:
            if _is_dns_failure(exc):
                raise DnsError(str(exc)) from exc
            raise ConnectFailure(str(exc)) from exc
        except requests.exceptions.RequestException as exc:
            raise TransportError(str(exc)) from exc
        return Response(
            status=resp.status_code,
            headers=dict(resp.headers),
            body=body,
            url=uri,
        )


def _is_dns_failure(exc: BaseException) -> bool:
    seen = set()
    cause: BaseException | None = exc
    while cause is not None and id(cause) not in seen:
        seen.add(id(cause))
        if isinstance(cause, socket.gaierror):
            return True
        if "name or service not known" in str(cause).lower():
            return True
        if "failed to resolve" in str(cause).lower():
            return True
        cause = cause.__cause__ or cause.__context__
    return False


_ERROR_CLASSES = {
    "dns": DnsError,
    "timeout": RequestTimeout,
    "connect": ConnectFailure,
}


@dataclass
class ReplayEntry:
    uri: str
    method: str = "*"
    match: str = "exact"
    status: int | None = None
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes = b""
    error: str | None = None

    def to_dict(self) -> dict:
        d: dict = {"uri": self.uri}
        if self.method != "*":
            d["method"] = self.method
        if self.match != "exact":
            d["match"] = self.match
        if self.error is not None:
            d["error"] = self.error
            return d
        d["status"] = self.status
        if self.headers:
            d["headers"] = dict(self.headers)
        if self.body:
            try:
                d["body"] = self.body.decode("utf-8")
            except UnicodeDecodeError:
                d["body_base64"] = base64.b64encode(self.body).decode("ascii")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReplayEntry":
        error = d.get("error")
        if error is not None and error not in _ERROR_CLASSES:
            raise ValueError("unknown replay error kind %r (expected one of %s)"
                             % (error, ", ".join(sorted(_ERROR_CLASSES))))
        if error is None and "status" not in d:
            raise ValueError("replay entry for %r has neither status nor error"
                             % d.get("uri"))
        if "body_base64" in d:
            body = base64.b64decode(d["body_base64"])
        else:
            body = d.get("body", "").encode("utf-8")
        return cls(
            uri=d["uri"],
            method=d.get("method", "*"),
            match=d.get("match", "exact"),
            status=d.get("status"),
            headers=dict(d.get("headers", {})),
            body=body,
            error=error,
        )


class ReplayStore:
    """Recorded request -> response mapping, backed by one JSON file."""

    def __init__(self, entries: list[ReplayEntry] | None = None):
        self.entries: list[ReplayEntry] = list(entries or [])
        self._lock = threading.Lock()

    def add(self, uri: str, status: int | None = None, headers: dict | None = None,
            body: bytes | str = b"", method: str = "*", match: str = "exact",
            error: str | None = None) -> None:
        if isinstance(body, str):
            body = body.encode("utf-8")
        with self._lock:
            self.entries.append(ReplayEntry(
                uri=uri, method=method, match=match, status=status,
                headers=dict(headers or {}), body=body, error=error,
            ))

    def lookup(self, method: str, uri: str) -> ReplayEntry | None:
        exact_any = None
        prefix_best = None
        for entry in self.entries:
            method_ok = entry.method in ("*", method)
            if not method_ok:
                continue
            if entry.match == "exact" and entry.uri == uri:
                if entry.method == method:
                    return entry
                exact_any = exact_any or entry
            elif entry.match == "prefix" and uri.startswith(entry.uri):
                if prefix_best is None or len(entry.uri) > len(prefix_best.uri) or (
                    len(entry.uri) == len(prefix_best.uri)
                    and prefix_best.method == "*" and entry.method == method
                ):
                    prefix_best = entry
        return exact_any or prefix_best

    @classmethod
    def load(cls, path: str | Path) -> "ReplayStore":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls([ReplayEntry.from_dict(d) for d in data.get("entries", [])])

    def save(self, path: str | Path) -> None:
        with self._lock:
            payload = {"entries": [e.to_dict() for e in self.entries]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


class ReplayTransport:
    """Serve requests from a ReplayStore; raise ReplayMiss on gaps."""

    def __init__(self, store: ReplayStore):
        self.store = store

    def request(self, method: str, uri: str) -> Response:
        entry = self.store.lookup(method, uri)
        if entry is None:
            raise ReplayMiss(method, uri)
        if entry.error is not None:
            raise _ERROR_CLASSES[entry.error]("recorded %s failure for %s"
                                              % (entry.error, uri))
        body = b"" if method == "HEAD" else entry.body
        return Response(status=entry.status or 0, headers=dict(entry.headers),
                        body=body, url=uri)


class RecordingTransport:
    """Pass requests through to ``inner`` and record the outcomes."""

    def __init__(self, inner: Transport, store: ReplayStore):
        self.inner = inner
        self.store = store

    def request(self, method: str, uri: str) -> Response:
        try:
            resp = self.inner.request(method, uri)
        except DnsError:
            self.store.add(uri, method=method, error="dns")
            raise
        except RequestTimeout:
            self.store.add(uri, method=method, error="timeout")
            raise
        except TransportError:
            self.store.add(uri, method=method, error="connect")
            raise
        self.store.add(uri, method=method, status=resp.status,
                       headers=resp.headers, body=resp.body)
        return resp


class CountingTransport:
    """Wrapper that counts requests; used to assert request budgets."""

    def __init__(self, inner: Transport):
        self.inner = inner
        self.count = 0
        self._lock = threading.Lock()

    def request(self, method: str, uri: str) -> Response:
        with self._lock:
            self.count += 1
        return self.inner.request(method, uri)
