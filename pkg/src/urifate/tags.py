"""Hashtag co-occurrence statistics and event-dataset filtration.

The filtration idea: a post that carries *all* of a greedily grown set of
co-occurring tags is almost certainly about the event those tags describe,
so precision is bought by shrinking the corpus tag by tag.
"""
from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, TextIO

from .posts import Corpus

logger = logging.getLogger(__name__)


class UnknownTagError(KeyError):
    """Raised when an expansion is asked for a tag absent from the table."""

    def __init__(self, tag: str):
        super().__init__(tag)
        self.tag = tag

    def __str__(self) -> str:
        return "tag %r does not occur in the frequency table" % self.tag


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class TagFrequencyTable:
    """Per-tag post counts and unordered-pair co-occurrence counts.

    A tag counts once per post regardless of repetition, so
    cooccur(a, b) <= min(counts(a), counts(b)) for tables built from a
    corpus. Pairs are stored once, under sorted order.
    """

    counts: dict[str, int] = field(default_factory=dict)
    cooccur: dict[tuple[str, str], int] = field(default_factory=dict)

    def count(self, tag: str) -> int:
        return self.counts.get(tag, 0)

    def pair_count(self, a: str, b: str) -> int:
        return self.cooccur.get(_pair(a, b), 0)

    def merge(self, other: "TagFrequencyTable") -> "TagFrequencyTable":
        """Combine two partial tables; associative and commutative, so
        sharded counting can merge in any order."""
        merged = TagFrequencyTable(dict(self.counts), dict(self.cooccur))
        for tag, n in other.counts.items():
            merged.counts[tag] = merged.counts.get(tag, 0) + n
        for pair, n in other.cooccur.items():
            merged.cooccur[pair] = merged.cooccur.get(pair, 0) + n
        return merged


@dataclass
class SelectionSet:
    """Ordered tag set a post must fully contain to enter an event dataset.

    The initial tag comes first, greedily added tags follow. The initial
    tag is exempt from the stoplist (you may audit an event whose seed tag
    is itself general).
    """

    tags: list[str]
    stoplist: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("selection set contains duplicate tags: %r" % self.tags)
        banned = set(self.tags[1:]) & self.stoplist
        if banned:
            raise ValueError(
                "selection set contains stoplisted tags: %s" % ", ".join(sorted(banned))
            )


def build_frequency_table(corpus: Corpus) -> TagFrequencyTable:
    """Count tag and tag-pair occurrences over each post's hashtag set."""
    table = TagFrequencyTable()
    for post in corpus.posts:
        tags = sorted(post.hashtags)
        for tag in tags:
            table.counts[tag] = table.counts.get(tag, 0) + 1
        for pair in combinations(tags, 2):
            table.cooccur[pair] = table.cooccur.get(pair, 0) + 1
    return table


def expand_tags(
    table: TagFrequencyTable,
    initial: str,
    stoplist: Iterable[str] = (),
    k: int = 10,
) -> list[tuple[str, int]]:
    """Top-k tags co-occurring with ``initial``, most frequent first.

    Stoplisted tags and the initial tag itself are excluded; ties break
    lexicographically. Tags that never co-occur are not candidates.
    """
    if initial not in table.counts:
        raise UnknownTagError(initial)
    banned = set(stoplist)
    scored = []
    for tag in table.counts:
        if tag == initial or tag in banned:
            continue
        n = table.pair_count(initial, tag)
        if n > 0:
            scored.append((tag, n))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def grow_selection_set(
    corpus: Corpus, seed: SelectionSet, target_size: int
) -> SelectionSet:
    """Greedily append the tag that most often co-occurs with the whole set.

    Each iteration restricts to posts containing every current tag, counts
    the other (non-stoplisted) tags there, and appends the most frequent,
    ties broken lexicographically. Stops at ``target_size`` or early when
    nothing co-occurs with the whole set any more.
    """
    if target_size < len(seed.tags):
        raise ValueError(
            "target_size %d is smaller than the seed (%d tags)"
            % (target_size, len(seed.tags))
        )
    tags = list(seed.tags)
    while len(tags) < target_size:
        wanted = set(tags)
        tally: dict[str, int] = {}
        for post in corpus.posts:
            if not wanted <= post.hashtags:
                continue
            for tag in post.hashtags:
                if tag in wanted or tag in seed.stoplist:
                    continue
                tally[tag] = tally.get(tag, 0) + 1
        if not tally:
            logger.info(
                "selection set stopped early at %d tags: no tag co-occurs with %r",
                len(tags), tags,
            )
            break
        best = min(tally, key=lambda tag: (-tally[tag], tag))
        tags.append(best)
    return SelectionSet(tags=tags, stoplist=set(seed.stoplist))


def filter_by_selection_set(
    corpus: Corpus, sel: SelectionSet, require_uri: bool = False
) -> Corpus:
    """Posts containing every selection-set tag, input order preserved."""
    wanted = set(sel.tags)
    posts = [
        post
        for post in corpus.posts
        if wanted <= post.hashtags and (not require_uri or post.uris)
    ]
    return Corpus(posts=posts, source_label=corpus.source_label)


def sample(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Uniform sample without replacement of round(fraction * N) posts.

    Deterministic for a given seed; surviving posts keep their original
    order.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1], got %r" % fraction)
    n = len(corpus.posts)
    k = round(fraction * n)
    if k >= n:
        return Corpus(posts=list(corpus.posts), source_label=corpus.source_label)
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(n), k))
    return Corpus(
        posts=[corpus.posts[i] for i in chosen], source_label=corpus.source_label
    )


def load_stoplist(stream: Iterable[str]) -> set[str]:
    """One tag per line; a leading '#' is stripped so '#cnn' and 'cnn' both work."""
    tags = set()
    for raw in stream:
        tag = raw.strip().lstrip("#").lower()
        if tag:
            tags.add(tag)
    return tags


def write_counts_csv(table: TagFrequencyTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tag", "count"])
    for tag in sorted(table.counts, key=lambda t: (-table.counts[t], t)):
        writer.writerow([tag, table.counts[tag]])


def write_cooccur_csv(table: TagFrequencyTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["tag_a", "tag_b", "count"])
    for (a, b) in sorted(table.cooccur, key=lambda p: (-table.cooccur[p], p)):
        writer.writerow([a, b, table.cooccur[(a, b)]])
