"""M3.1 - Query -> detection targets.

An extractor (LLM-backed or heuristic) proposes object labels; labels are
trimmed, lowercased and deduplicated in first-seen order. An empty proposal
falls back to the heuristic extractor so the detector always has a prompt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, List, Protocol, Tuple

from modules.common.errors import InvalidArgumentError
from modules.common.logs import get_logger
from modules.m2 import Query

LOGGER = get_logger("m3.objects")

# interrogatives, function words, attribute nouns and colour/size adjectives; never a target
STOPWORDS = frozenset(
    """
    a an the this that these those there here it its is are was were be been being am
    do does did can could would should will shall may might must have has had
    what which who whom whose where when why how whether
    of on in at to from by with without for about into onto over under above below
    between behind beside near next left right top bottom front back side middle
    and or but not no yes if than then so as
    i you he she we they me him her us them my your his our their
    color colour colors size shape kind type number many much count appear appears
    image picture photo scene shown visible located position relative
    red green blue yellow purple pink brown black white gray grey golden silver colored coloured
    big bigger biggest small smaller smallest large larger largest little tiny huge tall short
    long wide narrow
    please tell describe find identify
    """.split()
)

_TOKEN = re.compile(r"[a-z][a-z\-]*")


@dataclass(frozen=True)
class ObjectSet:
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise InvalidArgumentError("object set must not be empty")
        if any(not lbl for lbl in self.labels):
            raise InvalidArgumentError("object labels must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidArgumentError(f"duplicate object labels: {self.labels}")


class ObjectExtractorProvider(Protocol):
    def extract(self, query: str) -> List[str]: ...


def normalize_labels(raw: Iterable[str]) -> List[str]:
    seen: List[str] = []
    for item in raw:
        lbl = " ".join(str(item).split()).lower()
        if lbl and lbl not in seen:
            seen.append(lbl)
    return seen


def _singular(word: str) -> str:
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def heuristic_objects(query: str) -> List[str]:
    """Content words left after dropping the stoplist; never empty for a nonempty query."""
    tokens = [t.strip("-") for t in _TOKEN.findall(query.lower())]
    words = [t for t in tokens if t and t not in STOPWORDS and len(t) > 1]
    words = [_singular(w) for w in words]
    labels = normalize_labels(words)
    return labels or [" ".join(query.split()).lower()]


class HeuristicExtractor:
    """Deterministic extractor used when no LLM endpoint is configured."""

    def extract(self, query: str) -> List[str]:
        return heuristic_objects(query)


def extract_objects(query: Query, extractor: ObjectExtractorProvider) -> ObjectSet:
    labels = normalize_labels(extractor.extract(query.text))
    if not labels:
        LOGGER.info("extractor returned no objects, using heuristic fallback")
        labels = heuristic_objects(query.text)
    return ObjectSet(tuple(labels))
