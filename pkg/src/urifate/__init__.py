"""urifate: audit the fate of URIs shared in social media.

Parse post corpora, filter them down to event datasets by hashtag
co-occurrence, resolve shared URIs to canonical form, classify them as
available or missing on the live web, check archival coverage through
TimeMaps, and model loss and coverage as linear functions of age.
"""

from .analysis import (
    CentroidSplit,
    CoverageMismatchError,
    DegenerateFitError,
    EventStats,
    LinearModel,
    age_in_days,
    contingency,
    daily_counts,
    detect_centroids,
    fit_linear,
    nearest_centroid,
    predict,
    split_by_centroid,
)
from .auditlog import ResultsLog
from .clocks import SystemClock, VirtualClock
from .liveness import (
    AVAILABLE,
    MISSING,
    LivenessVerdict,
    Reason,
    audit_rounds,
    classify_once,
    detect_soft404,
    shingle_similarity,
)
from .memento import (
    ArchiveVerdict,
    LinkFormatError,
    Memento,
    TimeMap,
    archive_audit,
    fetch_timemap,
    is_archived,
    parse_link_format,
    serialize_link_format,
)
from .posts import Corpus, Post, parse_snap_stream, parse_uri_list
from .redirects import AliasGroup, UriRecord, dedupe, normalize_uri, resolve_chain
from .tags import (
    SelectionSet,
    TagFrequencyTable,
    build_frequency_table,
    expand_tags,
    filter_by_selection_set,
    grow_selection_set,
    sample,
)
from .transport import (
    LiveTransport,
    RecordingTransport,
    ReplayMiss,
    ReplayStore,
    ReplayTransport,
    Response,
    TransportError,
)

__version__ = "0.1.0"

__all__ = [
    "AVAILABLE",
    "AliasGroup",
    "ArchiveVerdict",
    "CentroidSplit",
    "Corpus",
    "CoverageMismatchError",
    "DegenerateFitError",
    "EventStats",
    "LinearModel",
    "LinkFormatError",
    "LiveTransport",
    "LivenessVerdict",
    "MISSING",
    "Memento",
    "Post",
    "Reason",
    "RecordingTransport",
    "ReplayMiss",
    "ReplayStore",
    "ReplayTransport",
    "Response",
    "ResultsLog",
    "SelectionSet",
    "SystemClock",
    "TagFrequencyTable",
    "TimeMap",
    "TransportError",
    "UriRecord",
    "VirtualClock",
    "age_in_days",
    "archive_audit",
    "audit_rounds",
    "build_frequency_table",
    "classify_once",
    "contingency",
    "daily_counts",
    "dedupe",
    "detect_centroids",
    "detect_soft404",
    "expand_tags",
    "fetch_timemap",
    "filter_by_selection_set",
    "fit_linear",
    "grow_selection_set",
    "is_archived",
    "nearest_centroid",
    "normalize_uri",
    "parse_link_format",
    "parse_snap_stream",
    "parse_uri_list",
    "predict",
    "resolve_chain",
    "sample",
    "serialize_link_format",
    "shingle_similarity",
    "split_by_centroid",
]
