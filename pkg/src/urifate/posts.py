"""Parse social-post corpora into Post records.

Two input formats are supported: the three-line T/U/W tweet serialization
used by large crawled Twitter corpora, and a plain one-URI-per-line list
for collections gathered by hand.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, TextIO
from urllib.parse import urlparse

logger = logging.getLogger(__name__)

SNAP_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"

# Scheme-anchored: tweets carry full http(s) URIs, bare domains are too
# noisy to detect reliably.
_URI_RE = re.compile(r"https?://[^\s<>\"']+", re.IGNORECASE)
_HASHTAG_RE = re.compile(r"#(\w+)")
_MENTION_RE = re.compile(r"@(\w+)")
_RECORD_LINE_RE = re.compile(r"^([TUW])[ \t]+(.*)$")

# Punctuation that ends a sentence, not a URI.
_TRAILING_PUNCT = ".,;:!?)]}>\"'"


@dataclass
class Post:
    """One social-media record."""

    created_at: datetime
    author: str
    text: str
    hashtags: set[str] = field(default_factory=set)
    mentions: set[str] = field(default_factory=set)
    uris: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "created_at": snap_timestamp(self.created_at),
            "author": self.author,
            "text": self.text,
            "hashtags": sorted(self.hashtags),
            "mentions": sorted(self.mentions),
            "uris": list(self.uris),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Post":
        return cls(
            created_at=parse_snap_timestamp(d["created_at"]),
            author=d["author"],
            text=d["text"],
            hashtags=set(d["hashtags"]),
            mentions=set(d["mentions"]),
            uris=list(d["uris"]),
        )


@dataclass
class Corpus:
    """An ordered list of posts plus a label naming where they came from."""

    posts: list[Post] = field(default_factory=list)
    source_label: str = ""

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)


def parse_snap_timestamp(text: str) -> datetime:
    """Parse 'YYYY-MM-DD HH:MM:SS' as UTC (the corpus states no timezone)."""
    return datetime.strptime(text, SNAP_TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


def snap_timestamp(dt: datetime) -> str:
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc)
    return dt.strftime(SNAP_TIMESTAMP_FORMAT)


def extract_uris(text: str) -> list[str]:
    """Absolute http(s) URIs in order of appearance, trailing punctuation stripped."""
    uris = []
    for match in _URI_RE.finditer(text):
        uri = match.group(0).rstrip(_TRAILING_PUNCT)
        if uri:
            uris.append(uri)
    return uris


def extract_hashtags(text: str) -> set[str]:
    """'#' followed by a maximal run of word characters, lowercased, '#' stripped."""
    return {m.group(1).lower() for m in _HASHTAG_RE.finditer(text)}


def extract_mentions(text: str) -> set[str]:
    return {m.group(1) for m in _MENTION_RE.finditer(text)}


def author_from_uri(uri: str) -> str:
    """Path tail of the author URI ('http://Twitter.com/nickgotch' -> 'nickgotch')."""
    path = urlparse(uri).path
    return path.rstrip("/").rsplit("/", 1)[-1]


SkipCallback = Callable[[int, str], None]


def _report_skip(line_no: int, reason: str, on_skip: SkipCallback | None) -> None:
    logger.warning("skipping record at line %d: %s", line_no, reason)
    if on_skip is not None:
        on_skip(line_no, reason)


def _post_from_block(block: list[tuple[int, str, str]]) -> Post:
    """Build a Post from [(line_no, prefix, value)], raising ValueError when malformed."""
    fields: dict[str, str] = {}
    for _line_no, prefix, value in block:
        fields.setdefault(prefix, value)
    missing = [p for p in "TUW" if p not in fields]
    if missing:
        raise ValueError("missing %s line" % "/".join(missing))
    try:
        created_at = parse_snap_timestamp(fields["T"].strip())
    except ValueError:
        raise ValueError("unparseable timestamp %r" % fields["T"].strip())
    text = fields["W"]
    return Post(
        created_at=created_at,
        author=author_from_uri(fields["U"].strip()),
        text=text,
        hashtags=extract_hashtags(text),
        mentions=extract_mentions(text),
        uris=extract_uris(text),
    )


def parse_snap_stream(
    stream: Iterable[str],
    source_label: str = "",
    on_skip: SkipCallback | None = None,
) -> Corpus:
    """Parse a T/U/W record stream into a Corpus.

    Records are blank-line separated; a fresh T line also starts a new
    record so concatenated files parse. Malformed records (missing lines,
    bad timestamps, stray text) are reported with their line number and
    skipped — a single bad record must not abort a multi-gigabyte run.
    """
    posts: list[Post] = []
    block: list[tuple[int, str, str]] = []

    def flush() -> None:
        if not block:
            return
        start_line = block[0][0]
        try:
            posts.append(_post_from_block(block))
        except ValueError as exc:
            _report_skip(start_line, str(exc), on_skip)
        block.clear()

    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        m = _RECORD_LINE_RE.match(line)
        if m is None:
            # Stray content voids the record it touches.
            block.append((line_no, "?", line))
            _report_skip(line_no, "unrecognized line %r" % line[:60], on_skip)
            block.clear()
            continue
        prefix, value = m.group(1), m.group(2)
        if prefix == "T" and any(p == "T" for _, p, _ in block):
            flush()
        block.append((line_no, prefix, value))
    flush()
    return Corpus(posts=posts, source_label=source_label)


def parse_uri_list(
    stream: Iterable[str],
    default_date: datetime,
    source_label: str = "",
    on_skip: SkipCallback | None = None,
) -> Corpus:
    """Parse a one-URI-per-line file; '#' lines are comments.

    Each URI becomes a Post with empty text and tags and created_at set to
    ``default_date`` (hand-gathered collections carry no per-item dates).
    """
    if default_date.tzinfo is None:
        default_date = default_date.replace(tzinfo=timezone.utc)
    posts = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parsed = urlparse(line)
        if parsed.scheme not in ("http", "https") or not parsed.netloc or " " in line:
            _report_skip(line_no, "not a URI: %r" % line[:60], on_skip)
            continue
        posts.append(
            Post(created_at=default_date, author="", text="", uris=[line])
        )
    return Corpus(posts=posts, source_label=source_label)


def format_snap_record(post: Post, author_base: str = "http://twitter.com/") -> str:
    """Serialize a post back to the three-line T/U/W layout (tab after the letter)."""
    return "T\t%s\nU\t%s%s\nW\t%s\n" % (
        snap_timestamp(post.created_at),
        author_base,
        post.author,
        post.text,
    )


def write_snap(corpus: Corpus, stream: TextIO) -> None:
    for post in corpus.posts:
        stream.write(format_snap_record(post))
        stream.write("\n")


def write_posts_jsonl(corpus: Corpus, stream: TextIO) -> None:
    for post in corpus.posts:
        stream.write(json.dumps(post.to_dict(), sort_keys=True))
        stream.write("\n")


def read_posts_jsonl(stream: Iterable[str], source_label: str = "") -> Corpus:
    posts = [Post.from_dict(json.loads(line)) for line in stream if line.strip()]
    return Corpus(posts=posts, source_label=source_label)
