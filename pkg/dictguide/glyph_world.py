# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           glyph_world.py

# DESCRIPTION:    Synthetic stand-in for scene-text images. A word is
#                 rendered to a 25 x 37 grid of per-cell channel vectors
#                 (one channel per character plus blank/EOS), then
#                 corrupted by a seeded process driven by the confusion
#                 table: a smear leaks mass onto look-alike channels and a
#                 swap moves the dominant mass onto one of them.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

# 3rd party:
import numpy as np
import pandas as pd

# Local
from dictguide.exceptions import (CorruptFile, DatasetGenerationError,
                                  EmptyLexicon, InvalidConfig, VersionMismatch)
from dictguide.lexicon_index import ALPHABET, MAX_WORD_LENGTH, Lexicon
from dictguide.params import params
from dictguide.utilities import data_connections
from dictguide.utilities import field_definitions as fd
from dictguide.utilities.processing_steps import (check_at_least,
                                                  check_probability,
                                                  simplex_violation)

logger = logging.getLogger(__name__)

GRID_WIDTH = MAX_WORD_LENGTH
NUM_CHANNELS = len(ALPHABET) + 1
BLANK = len(ALPHABET)
CHAR_TO_ID: Dict[str, int] = {ch: i for i, ch in enumerate(ALPHABET)}
CONFUSION_ROW_SIZE = 5
CONFUSION_TABLE_VERSION = 1
CONFUSION_TABLE_PATH = Path(__file__).parent / 'data' / 'confusion_table.txt'

DATASET_FORMAT = 'dictguide-dataset'
DATASET_FORMAT_VERSION = 1
# cell values are stored as integers in units of 1e-12
FIXED_POINT_SCALE = 10 ** 12
SIMPLEX_TOL = 1e-9


# Define ConfusionTable
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class ConfusionTable:
    """Five visually similar characters for every alphabet character."""
    entries: Dict[str, Tuple[str, ...]]

    def __post_init__(self):
        if set(self.entries) != set(ALPHABET):
            missing = sorted(set(ALPHABET) - set(self.entries))
            raise InvalidConfig(f"confusion table must cover the alphabet, missing {missing}")
        for key, row in self.entries.items():
            if len(row) != CONFUSION_ROW_SIZE or len(set(row)) != CONFUSION_ROW_SIZE:
                raise InvalidConfig(f"confusion row {key!r} needs 5 distinct characters, got {row}")
            if key in row or not set(row) <= set(ALPHABET):
                raise InvalidConfig(f"confusion row {key!r} is invalid: {row}")

    def __getitem__(self, key: str) -> Tuple[str, ...]:
        return self.entries[key]

    def row_ids(self) -> np.ndarray:
        """36 x 5 matrix of channel ids, row i for ALPHABET[i]."""
        return np.array([[CHAR_TO_ID[c] for c in self.entries[ch]] for ch in ALPHABET],
                        dtype=np.int64)


def parse_confusion_table(lines: Sequence[str]) -> ConfusionTable:
    entries = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        key, sep, row = line.strip().partition(':')
        if not sep or len(key) != 1:
            raise CorruptFile(f"confusion table line {lineno} is not 'key:c1c2c3c4c5': {line!r}")
        if key in entries:
            raise CorruptFile(f"confusion table repeats key {key!r} on line {lineno}")
        entries[key] = tuple(row)
    return ConfusionTable(entries)


def load_confusion_table(path) -> ConfusionTable:
    return parse_confusion_table(data_connections.read_lines(path))


def save_confusion_table(table: ConfusionTable, path) -> None:
    text = ''.join(f"{ch}:{''.join(table[ch])}\n" for ch in ALPHABET)
    data_connections.write_text(path, text)


# Define default_confusion_table()
# -------------------------------------------------------------------------
def default_confusion_table() -> ConfusionTable:
    """
    The shipped table (data/confusion_table.txt, version 1). Row 'a' is
    d, e, o, q, u and the rows for t, e, n, d contain r, c, m, q.
    """
    return load_confusion_table(CONFUSION_TABLE_PATH)


# Define GlyphImage / LabeledSample / DatasetSpec
# -------------------------------------------------------------------------
@dataclass(eq=False)
class GlyphImage:
    """W x K grid; every cell is a distribution over the 37 channels."""
    cells: np.ndarray
    label_length: int

    def is_valid(self, tol: float = SIMPLEX_TOL) -> bool:
        return (self.cells.shape == (GRID_WIDTH, NUM_CHANNELS)
                and simplex_violation(self.cells, tol) <= tol)


@dataclass(eq=False)
class LabeledSample:
    image: GlyphImage
    label: str


@dataclass(frozen=True)
class DatasetSpec:
    seed: int = params['dataset_seed']
    train_size: int = params['train_size']
    test_size: int = params['test_size']
    noise_rate: float = params['noise_rate']
    smear: float = params['smear']
    out_of_lexicon_fraction: float = params['out_of_lexicon_fraction']

    def __post_init__(self):
        check_at_least('train_size', self.train_size, 1)
        check_at_least('test_size', self.test_size, 1)
        check_probability('noise_rate', self.noise_rate)
        check_probability('smear', self.smear)
        check_probability('out_of_lexicon_fraction', self.out_of_lexicon_fraction)
        if self.smear >= 5 / 6:
            # beyond this the smeared neighbours outweigh the rendered character
            raise InvalidConfig(f"smear must be < 5/6, got {self.smear}")

    @classmethod
    def from_params(cls, **overrides) -> 'DatasetSpec':
        return cls(**overrides)


# Define render()
# -------------------------------------------------------------------------
def render(label: str) -> GlyphImage:
    """One-hot cell per character, blank one-hot for the rest of the grid."""
    if len(label) > GRID_WIDTH:
        raise InvalidConfig(f"label {label!r} longer than the grid ({GRID_WIDTH})")
    ids = [CHAR_TO_ID[ch] for ch in label] + [BLANK] * (GRID_WIDTH - len(label))
    cells = np.zeros((GRID_WIDTH, NUM_CHANNELS), dtype=np.float64)
    cells[np.arange(GRID_WIDTH), ids] = 1.0
    return GlyphImage(cells, len(label))


# Define perturb()
# -------------------------------------------------------------------------
def perturb(image: GlyphImage,
            table: ConfusionTable,
            noise_rate: float,
            smear: float,
            rng_seed: int) -> GlyphImage:
    """
    Corrupt the non-blank cells of an image.

    For every non-blank cell with dominant character c:
      1. smear: the cell keeps (1 - smear) of its mass and smear / 5 goes to
         each of c's five confusable channels, then the cell is renormalized;
      2. swap: with probability noise_rate, the values of channel c and of a
         uniformly chosen confusable channel are exchanged.

    After a swap the confusable channel dominates while c keeps only the
    smear residue. Blank cells are left untouched. The random stream draws
    one uniform and one row position per non-blank cell whatever the rates,
    so equal seeds give equal outputs.
    """
    cells = image.cells.copy()
    length = image.label_length
    rng = np.random.default_rng(rng_seed)
    swap_draws = rng.random(length)
    neighbour_draws = rng.integers(CONFUSION_ROW_SIZE, size=length)
    if length == 0 or (noise_rate == 0 and smear == 0):
        return GlyphImage(cells, length)

    rows = table.row_ids()
    dominant = cells[:length].argmax(axis=1)
    # cells already reading as blank carry no character to confuse
    positions = np.flatnonzero(dominant != BLANK)
    dominant = dominant[positions]
    neighbours = rows[dominant]

    if smear > 0 and positions.size:
        block = cells[positions]
        mass = block.sum(axis=1)
        block *= (1.0 - smear)
        block[np.arange(positions.size)[:, None], neighbours] += (smear * mass / CONFUSION_ROW_SIZE)[:, None]
        cells[positions] = block / block.sum(axis=1, keepdims=True)

    swapped = swap_draws[positions] < noise_rate
    if np.any(swapped):
        pos = positions[swapped]
        src = dominant[swapped]
        dst = neighbours[swapped, neighbour_draws[pos]]
        src_values = cells[pos, src].copy()
        cells[pos, src] = cells[pos, dst]
        cells[pos, dst] = src_values
    return GlyphImage(cells, length)


# Define argmax_decode() / noise_profile()
# -------------------------------------------------------------------------
def argmax_decode(image: GlyphImage) -> str:
    """Read an image by its dominant channel per cell, stopping at blank."""
    chars = []
    for channel in image.cells.argmax(axis=1):
        if channel == BLANK:
            break
        chars.append(ALPHABET[channel])
    return ''.join(chars)


def noise_profile(samples: Sequence[LabeledSample]) -> float:
    """Fraction of non-blank cells whose dominant channel is not the label's."""
    changed = total = 0
    for sample in samples:
        ids = np.array([CHAR_TO_ID[ch] for ch in sample.label], dtype=np.int64)
        dominant = sample.image.cells[:len(ids)].argmax(axis=1)
        changed += int(np.sum(dominant != ids))
        total += len(ids)
    return changed / total if total else 0.0


# Define generate_dataset()
# -------------------------------------------------------------------------
def out_of_lexicon_variant(word: str,
                           table: ConfusionTable,
                           lexicon: Lexicon,
                           rng: np.random.Generator) -> str:
    """
    Replace one character of `word` by a confusable one so that the result
    is not a lexicon word. Returns '' when every variant is in the lexicon.
    """
    variants = [word[:i] + r + word[i + 1:] for i, ch in enumerate(word) for r in table[ch]]
    for j in rng.permutation(len(variants)):
        if variants[j] not in lexicon:
            return variants[j]
    return ''


def _corrupt(labels: Sequence[str],
             seeds: np.ndarray,
             spec: DatasetSpec,
             table: ConfusionTable) -> List[LabeledSample]:
    return [LabeledSample(perturb(render(label), table, spec.noise_rate, spec.smear, int(seed)), label)
            for label, seed in zip(labels, seeds)]


def generate_dataset(spec: DatasetSpec,
                     lexicon: Lexicon,
                     table: ConfusionTable = None) -> Tuple[List[LabeledSample], List[LabeledSample]]:
    """
    Draw train and test sets from a lexicon.

    Train labels are uniform with replacement over the lexicon. Exactly
    round(test_size * out_of_lexicon_fraction) test labels are confusable
    single-substitution variants of lexicon words that are themselves not
    in the lexicon; the rest are lexicon words. Every image is rendered,
    then perturbed with its own seed drawn from the dataset seed.
    """
    if lexicon is None or len(lexicon) == 0:
        raise EmptyLexicon("cannot draw a dataset from an empty lexicon")
    table = table or default_confusion_table()
    rng = np.random.default_rng(spec.seed)
    words = lexicon.words

    train_labels = [words[i] for i in rng.integers(len(words), size=spec.train_size)]
    n_ool = int(round(spec.test_size * spec.out_of_lexicon_fraction))
    ool_slots = set(rng.permutation(spec.test_size)[:n_ool].tolist())
    test_labels = []
    for slot in range(spec.test_size):
        word = words[int(rng.integers(len(words)))]
        if slot in ool_slots:
            variant = ''
            for _ in range(100):
                variant = out_of_lexicon_variant(word, table, lexicon, rng)
                if variant:
                    break
                word = words[int(rng.integers(len(words)))]
            if not variant:
                raise DatasetGenerationError("could not find out-of-lexicon variants; "
                                             "the lexicon covers its own confusable neighbourhood")
            word = variant
        test_labels.append(word)

    seeds = rng.integers(2 ** 63, size=spec.train_size + spec.test_size, dtype=np.int64)
    train = _corrupt(train_labels, seeds[:spec.train_size], spec, table)
    test = _corrupt(test_labels, seeds[spec.train_size:], spec, table)
    logger.info("generated dataset: %d train, %d test (%d out of lexicon), noise %.3f smear %.3f",
                len(train), len(test), n_ool, spec.noise_rate, spec.smear)
    return train, test


# Define dataset files
# -------------------------------------------------------------------------
def _encode_cells(cells: np.ndarray) -> str:
    return ' '.join(str(v) for v in np.rint(cells.ravel() * FIXED_POINT_SCALE).astype(np.int64))


def _decode_cells(text: str) -> np.ndarray:
    values = np.array(text.split(), dtype=np.int64)
    if values.size != GRID_WIDTH * NUM_CHANNELS:
        raise CorruptFile(f"cell grid has {values.size} values, expected {GRID_WIDTH * NUM_CHANNELS}")
    return values.reshape(GRID_WIDTH, NUM_CHANNELS).astype(np.float64) / FIXED_POINT_SCALE


def dataset_frame(train: Sequence[LabeledSample], test: Sequence[LabeledSample]) -> pd.DataFrame:
    rows = [{fd.SPLIT: split, fd.LABEL: s.label, fd.LABEL_LENGTH: s.image.label_length,
             fd.CELLS: _encode_cells(s.image.cells)}
            for split, samples in (('train', train), ('test', test)) for s in samples]
    return pd.DataFrame(rows, columns=list(fd.dataset_fields))


def save_dataset(path, spec: DatasetSpec, train, test) -> str:
    """
    Write a dataset file and return its sha256 digest.

    Line 1 is a JSON header {format, version, spec}; every further line is a
    JSON record (split, label, label_length, cells) with cells stored as
    space-separated integers in units of 1e-12.
    """
    header = json.dumps({'format': DATASET_FORMAT, 'version': DATASET_FORMAT_VERSION,
                         'spec': asdict(spec)}, sort_keys=True)
    body = dataset_frame(train, test).to_json(orient='records', lines=True)
    text = header + '\n' + body.rstrip('\n') + '\n'
    data_connections.write_text(path, text)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def load_dataset(path) -> Tuple[DatasetSpec, List[LabeledSample], List[LabeledSample]]:
    lines = data_connections.read_lines(path)
    if not lines:
        raise CorruptFile(f"{path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise CorruptFile(f"{path} has no dataset header") from err
    if header.get('format') != DATASET_FORMAT:
        raise CorruptFile(f"{path} is not a dataset file")
    if header.get('version') != DATASET_FORMAT_VERSION:
        raise VersionMismatch(f"dataset version {header.get('version')}, expected {DATASET_FORMAT_VERSION}")
    spec = DatasetSpec(**header['spec'])
    try:
        frame = pd.read_json(io.StringIO('\n'.join(lines[1:])), orient='records', lines=True,
                             dtype=False, convert_dates=False)
    except ValueError as err:
        raise CorruptFile(f"{path} has malformed records: {err}") from err
    splits: Dict[str, List[LabeledSample]] = {'train': [], 'test': []}
    for row in frame.itertuples(index=False):
        label = str(getattr(row, fd.LABEL))
        image = GlyphImage(_decode_cells(getattr(row, fd.CELLS)), int(getattr(row, fd.LABEL_LENGTH)))
        splits[getattr(row, fd.SPLIT)].append(LabeledSample(image, label))
    logger.info("loaded dataset %s: %d train, %d test", path, len(splits['train']), len(splits['test']))
    return spec, splits['train'], splits['test']


def dataset_digest(train: Sequence[LabeledSample], test: Sequence[LabeledSample]) -> str:
    """Content hash of in-memory samples (labels and raw cell bytes)."""
    h = hashlib.sha256()
    for samples in (train, test):
        for s in samples:
            h.update(s.label.encode('utf-8'))
            h.update(np.ascontiguousarray(s.image.cells).tobytes())
    return h.hexdigest()
