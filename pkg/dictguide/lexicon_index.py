# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           lexicon_index.py

# DESCRIPTION:    Normalized lexicon plus a BK-tree answering exact top-N
#                 smallest-edit-distance queries. Results are ordered by
#                 (distance, word) so that ties are broken the same way on
#                 every run; brute_force_top_n() is the reference the tree
#                 must agree with.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import hashlib
import heapq
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Tuple

# 3rd party:
import numpy as np
from rapidfuzz.distance import Levenshtein
from rapidfuzz.process import cdist

# Local
from dictguide.exceptions import (CorruptFile, EmptyLexicon, EmptyWord,
                                  InvalidCharacter, InvalidConfig, TooLong,
                                  VersionMismatch)
from dictguide.params import params
from dictguide.utilities import data_connections

logger = logging.getLogger(__name__)

# 10 digits then 26 lowercase letters; class id 36 is EOS and never appears in words
ALPHABET = '0123456789abcdefghijklmnopqrstuvwxyz'
ALPHABET_SET = frozenset(ALPHABET)
MAX_WORD_LENGTH = params['max_word_length']

INDEX_MAGIC = b'VDIX'
INDEX_FORMAT_VERSION = 1
_INDEX_HEADER = struct.Struct('<4sH64sI')


# Define normalize_word()
# -------------------------------------------------------------------------
def normalize_word(raw: str) -> str:
    """
    Lowercase a word and check it against the 36-character alphabet.

    Parameters:
        raw (str): Word as read from a file, a flag or a decoder.

    Returns:
        str: The normalized word.

    Raises:
        EmptyWord, TooLong, InvalidCharacter
    """
    word = raw.lower()
    if not word:
        raise EmptyWord("word is empty")
    if len(word) > MAX_WORD_LENGTH:
        raise TooLong(f"{raw!r} has {len(word)} characters, maximum is {MAX_WORD_LENGTH}")
    bad = sorted(set(word) - ALPHABET_SET)
    if bad:
        raise InvalidCharacter(f"{raw!r} contains characters outside [a-z0-9]: {''.join(bad)!r}")
    return word


# Define levenshtein()
# -------------------------------------------------------------------------
def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance between two words."""
    return Levenshtein.distance(a, b)


def _digest(words: Iterable[str]) -> str:
    return hashlib.sha256('\n'.join(words).encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class Lexicon:
    """Ordered set of normalized words with a content digest."""
    words: Tuple[str, ...]
    source_digest: str = ''
    _members: FrozenSet[str] = field(init=False, repr=False, compare=False)
    lex_rank: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.words:
            raise EmptyLexicon("lexicon has no words")
        members = frozenset(self.words)
        if len(members) != len(self.words):
            raise InvalidConfig("lexicon words must be unique")
        for word in self.words:
            if normalize_word(word) != word:
                raise InvalidCharacter(f"lexicon word {word!r} is not normalized")
        object.__setattr__(self, "_members", members)
        object.__setattr__(self, "lex_rank", _lex_rank(self.words))
        if not self.source_digest:
            object.__setattr__(self, 'source_digest', _digest(self.words))

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._members

    def __iter__(self):
        return iter(self.words)


class RankedCandidate(NamedTuple):
    word: str
    distance: int
    rank: int


# Define make_lexicon()
# -------------------------------------------------------------------------
def make_lexicon(words: Iterable[str]) -> Lexicon:
    """
    Normalize a word list into a Lexicon, dropping repeats after
    normalization while keeping first-occurrence order.
    """
    seen: Dict[str, None] = {}
    for raw in words:
        seen.setdefault(normalize_word(raw), None)
    return Lexicon(tuple(seen))


# Define load_lexicon()
# -------------------------------------------------------------------------
def load_lexicon(path) -> Lexicon:
    """
    Read a lexicon file: UTF-8, one word per line, '#' starts a comment line,
    blank lines are skipped. Invalid entries fail the load with their line
    number rather than being dropped.
    """
    words = []
    for lineno, line in enumerate(data_connections.read_lines(path), start=1):
        entry = line.strip()
        if not entry or entry.startswith('#'):
            continue
        try:
            words.append(normalize_word(entry))
        except (InvalidCharacter, TooLong) as err:
            raise type(err)(f"{path}:{lineno}: {err}") from err
    lexicon = make_lexicon(words)
    dropped = len(words) - len(lexicon)
    if dropped:
        logger.debug("dropped %d duplicate entries from %s", dropped, path)
    logger.info("loaded lexicon of %d words from %s", len(lexicon), path)
    return lexicon


def save_lexicon(lexicon: Lexicon, path) -> None:
    data_connections.write_text(path, '\n'.join(lexicon.words) + '\n')


# Define generate_lexicon()
# -------------------------------------------------------------------------
_CONSONANTS = 'bcdfghjklmnpqrstvwxyz'
_VOWELS = 'aeiou'


def generate_lexicon(size: int,
                     seed: int,
                     min_length: int = 3,
                     max_length: int = 10,
                     digit_fraction: float = 0.05) -> Lexicon:
    """
    Build a deterministic synthetic lexicon of `size` distinct words.

    Most words alternate consonants and vowels so they look pronounceable;
    about `digit_fraction` of them are digit strings, standing in for the
    numbers a real word list carries.
    """
    if size < 1:
        raise InvalidConfig(f"lexicon size must be >= 1, got {size}")
    if not 1 <= min_length <= max_length <= MAX_WORD_LENGTH:
        raise InvalidConfig(f"bad word length range [{min_length}, {max_length}]")
    rng = np.random.default_rng(seed)
    words: Dict[str, None] = {}
    attempts = 0
    while len(words) < size:
        attempts += 1
        if attempts > 50 * size + 1000:
            raise InvalidConfig(f"cannot draw {size} distinct words of length "
                                f"{min_length}..{max_length}")
        length = int(rng.integers(min_length, max_length + 1))
        if rng.random() < digit_fraction:
            word = ''.join(rng.choice(list('0123456789'), size=min(length, 6)))
        else:
            start_vowel = rng.random() < 0.3
            chars = []
            for i in range(length):
                pool = _VOWELS if (i % 2 == 0) == start_vowel else _CONSONANTS
                chars.append(pool[int(rng.integers(len(pool)))])
            word = ''.join(chars)
        words.setdefault(word, None)
    logger.debug("generated %d words in %d draws", size, attempts)
    return Lexicon(tuple(words))


# Define MetricIndex
# -------------------------------------------------------------------------
@dataclass(eq=False)
class MetricIndex:
    """
    BK-tree over a lexicon. Node i holds words[i]; node 0 is the root;
    parents[i] / edges[i] give each node's parent and its Levenshtein
    distance to that parent (-1 / 0 for the root).
    """
    words: Tuple[str, ...]
    parents: np.ndarray
    edges: np.ndarray
    source_digest: str
    children: List[Dict[int, int]] = field(repr=False, default_factory=list)
    lex_rank: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.children:
            self.children = [dict() for _ in self.words]
            for node in range(1, len(self.words)):
                self.children[int(self.parents[node])][int(self.edges[node])] = node
        if self.lex_rank is None:
            self.lex_rank = _lex_rank(self.words)

    @property
    def word_count(self) -> int:
        return len(self.words)


def _lex_rank(words: Tuple[str, ...]) -> np.ndarray:
    order = sorted(range(len(words)), key=words.__getitem__)
    rank = np.empty(len(words), dtype=np.int64)
    rank[order] = np.arange(len(words))
    return rank


# Define build_index()
# -------------------------------------------------------------------------
def build_index(lexicon: Lexicon) -> MetricIndex:
    """Insert lexicon words into a BK-tree in lexicon order."""
    words = lexicon.words
    parents = np.full(len(words), -1, dtype=np.int32)
    edges = np.zeros(len(words), dtype=np.int16)
    children: List[Dict[int, int]] = [dict() for _ in words]
    for node in range(1, len(words)):
        word = words[node]
        current = 0
        while True:
            distance = Levenshtein.distance(word, words[current])
            nxt = children[current].get(distance)
            if nxt is None:
                children[current][distance] = node
                parents[node] = current
                edges[node] = distance
                break
            current = nxt
    logger.info("built BK-tree over %d words", len(words))
    return MetricIndex(words, parents, edges, lexicon.source_digest, children)


# Define top_n_candidates()
# -------------------------------------------------------------------------
def top_n_candidates(index: MetricIndex, query: str, n: int) -> List[RankedCandidate]:
    """
    Return the n lexicon words closest to `query`, ordered by
    (distance, word). n larger than the lexicon returns every word.

    The search is best-first on the triangle-inequality lower bound
    |d(query, node) - edge|, which holds for every word below that edge.
    A subtree is skipped only when its bound is strictly larger than the
    current n-th distance, so equal-distance words that win the
    lexicographic tie-break are never lost.
    """
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    if index.word_count == 0:
        raise EmptyLexicon("index has no words")
    words, children, lex_rank = index.words, index.children, index.lex_rank
    # max-heap of the best n so far as (-distance, -lex_rank, node)
    best: List[Tuple[int, int, int]] = []
    frontier = [(0, 0)]
    while frontier:
        bound, node = heapq.heappop(frontier)
        full = len(best) == n
        if full and bound > -best[0][0]:
            break
        distance = Levenshtein.distance(query, words[node])
        entry = (-distance, -int(lex_rank[node]), node)
        if not full:
            heapq.heappush(best, entry)
        elif entry > best[0]:
            heapq.heapreplace(best, entry)
        worst = -best[0][0] if len(best) == n else None
        for edge, child in children[node].items():
            child_bound = max(bound, abs(distance - edge))
            if worst is None or child_bound <= worst:
                heapq.heappush(frontier, (child_bound, child))
    ranked = sorted(best, reverse=True)
    return [RankedCandidate(words[node], -neg_distance, rank)
            for rank, (neg_distance, _, node) in enumerate(ranked)]


# Define radius_query()
# -------------------------------------------------------------------------
def radius_query(index: MetricIndex, query: str, max_distance: int) -> List[RankedCandidate]:
    """Every word within max_distance of query, ordered by (distance, word)."""
    if index.word_count == 0:
        raise EmptyLexicon("index has no words")
    found = []
    stack = [0]
    while stack:
        node = stack.pop()
        distance = Levenshtein.distance(query, index.words[node])
        if distance <= max_distance:
            found.append((distance, index.words[node]))
        for edge, child in index.children[node].items():
            if distance - max_distance <= edge <= distance + max_distance:
                stack.append(child)
    found.sort()
    return [RankedCandidate(word, distance, rank) for rank, (distance, word) in enumerate(found)]


# Define brute_force_top_n()
# -------------------------------------------------------------------------
def brute_force_top_n(lexicon: Lexicon, query: str, n: int) -> List[RankedCandidate]:
    """Reference scan: sort every (distance, word) pair and keep n."""
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    words = list(lexicon.words)
    distances = cdist([query], words, scorer=Levenshtein.distance, dtype=np.int32)[0]
    order = np.lexsort((lexicon.lex_rank, distances))[:n]
    return [RankedCandidate(words[i], int(distances[i]), r) for r, i in enumerate(order)]


# Define serialize_index() / save_index() / load_index()
# -------------------------------------------------------------------------
def serialize_index(index: MetricIndex) -> bytes:
    """Byte image of the index cache: header, parent and edge arrays, words."""
    header = _INDEX_HEADER.pack(INDEX_MAGIC, INDEX_FORMAT_VERSION,
                                index.source_digest.encode('ascii'), index.word_count)
    return b''.join([
        header,
        index.parents.astype('<i4').tobytes(),
        index.edges.astype('<i2').tobytes(),
        '\n'.join(index.words).encode('utf-8'),
    ])


def deserialize_index(payload: bytes) -> MetricIndex:
    if len(payload) < _INDEX_HEADER.size:
        raise CorruptFile("index cache is truncated")
    magic, version, digest, count = _INDEX_HEADER.unpack_from(payload)
    if magic != INDEX_MAGIC:
        raise CorruptFile("not an index cache (bad magic)")
    if version != INDEX_FORMAT_VERSION:
        raise VersionMismatch(f"index cache version {version}, expected {INDEX_FORMAT_VERSION}")
    offset = _INDEX_HEADER.size
    end_parents = offset + 4 * count
    end_edges = end_parents + 2 * count
    if len(payload) < end_edges:
        raise CorruptFile("index cache is truncated")
    parents = np.frombuffer(payload[offset:end_parents], dtype='<i4').astype(np.int32)
    edges = np.frombuffer(payload[end_parents:end_edges], dtype='<i2').astype(np.int16)
    try:
        words = tuple(payload[end_edges:].decode('utf-8').split('\n'))
    except UnicodeDecodeError as err:
        raise CorruptFile("index cache word table is not UTF-8") from err
    if len(words) != count:
        raise CorruptFile(f"index cache holds {len(words)} words, header says {count}")
    return MetricIndex(words, parents, edges, digest.decode('ascii'))


def save_index(index: MetricIndex, path) -> None:
    data_connections.write_bytes(path, serialize_index(index))


def load_index(path, lexicon: Lexicon) -> Optional[MetricIndex]:
    """
    Load a cached index. Returns None when the cache was built from a
    different lexicon (digest mismatch), so the caller rebuilds it.
    """
    index = deserialize_index(data_connections.read_bytes(path))
    if index.source_digest != lexicon.source_digest:
        logger.info("index cache %s is stale, digest mismatch", path)
        return None
    return index


def load_or_build_index(lexicon: Lexicon, cache_path=None) -> MetricIndex:
    if cache_path is not None and Path(cache_path).exists():
        index = load_index(cache_path, lexicon)
        if index is not None:
            return index
    index = build_index(lexicon)
    if cache_path is not None:
        save_index(index, cache_path)
    return index
