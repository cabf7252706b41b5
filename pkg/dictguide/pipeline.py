# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           pipeline.py

# DESCRIPTION:    Ties the pieces together: candidate sets from the lexicon
#                 index, the ordinary dictionary correction, two-forward
#                 inference in the three modes, and the two-stage training
#                 schedule (recognition, then matching).

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, MutableMapping, Optional, Sequence, Tuple, Union

# 3rd party:
import numpy as np

# Local
from dictguide import neural_core as nc
from dictguide.exceptions import InvalidConfig, NonFiniteLoss
from dictguide.glyph_world import (ConfusionTable, DatasetSpec, GlyphImage,
                                   LabeledSample, default_confusion_table)
from dictguide.lexicon_index import MetricIndex, top_n_candidates
from dictguide.params import params as defaults
from dictguide.resemblant_gen import resemblant_batch
from dictguide.utilities import data_connections
from dictguide.utilities import field_definitions as fd
from dictguide.utilities.processing_steps import check_at_least, check_positive

logger = logging.getLogger(__name__)


# Define CandidateSet / InferenceResult
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class CandidateSet:
    """
    Dictionary candidates in rank order, then the visual prediction if the
    dictionary did not already return it. distances[i] is the edit distance
    from the visual prediction to entries[i].
    """
    entries: Tuple[str, ...]
    source_prediction: str
    top_n_used: int
    distances: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries


@dataclass(eq=False)
class InferenceResult:
    visual_prediction: str
    candidates: Optional[CandidateSet]
    scores: Optional[np.ndarray]
    final: str
    mode: str


# Define build_candidate_set()
# -------------------------------------------------------------------------
def build_candidate_set(index: MetricIndex, y_hat: str, n: int) -> CandidateSet:
    """
    The top-n lexicon words for y_hat plus y_hat itself.

    y_hat may be empty (a recognizer that reads EOS first); it is then
    matched by length alone and kept as the last candidate.
    """
    ranked = top_n_candidates(index, y_hat, n)
    entries = [c.word for c in ranked]
    distances = [c.distance for c in ranked]
    if y_hat not in entries:
        entries.append(y_hat)
        distances.append(0)
    return CandidateSet(tuple(entries), y_hat, n, tuple(distances))


# Define ordinary_correct()
# -------------------------------------------------------------------------
def ordinary_correct(index: MetricIndex, y_hat: str) -> str:
    """Forced replacement by the nearest lexicon word (ties: lexicographic)."""
    return top_n_candidates(index, y_hat, 1)[0].word


# Define infer()
# -------------------------------------------------------------------------
def score_candidates(p: nc.ModelParams,
                     image_features: np.ndarray,
                     candidates: Sequence[str],
                     temperature: Union[float, nc.ITCConfig],
                     text_cache: Optional[MutableMapping[str, np.ndarray]] = None) -> np.ndarray:
    """
    Second forward: i2t probabilities of the candidates for one image.

    image_features are the L x C backbone features from the first forward;
    they are projected, not recomputed. text_cache maps words to their
    projected text embeddings and is filled in on the way.
    """
    image_emb = nc.project(p, nc.FeatureSequence(image_features, 'image'))
    if text_cache is None:
        text_embs = nc.embed_texts(p, candidates)
    else:
        missing = [w for w in dict.fromkeys(candidates) if w not in text_cache]
        if missing:
            for word, emb in zip(missing, nc.embed_texts(p, missing)):
                text_cache[word] = emb
        text_embs = np.stack([text_cache[w] for w in candidates])
    return nc.i2t_distribution(image_emb, text_embs, nc.ITCConfig.coerce(temperature).temperature)


def infer(p: nc.ModelParams,
          index: MetricIndex,
          image: GlyphImage,
          n: int = defaults['top_n'],
          temperature: Union[float, nc.ITCConfig] = defaults['temperature'],
          mode: str = 'proposed',
          text_cache: Optional[MutableMapping[str, np.ndarray]] = None) -> InferenceResult:
    """
    Run one image through the chosen mode.

    baseline returns the visual prediction, ordinary its nearest lexicon
    word, proposed the candidate with the highest i2t score (the earlier
    candidate wins an exact tie).
    """
    if mode not in fd.MODES:
        raise InvalidConfig(f"mode must be one of {fd.MODES}, got {mode!r}")
    features, _, y_hat = nc.recognize(p, image)
    if mode == 'baseline':
        return InferenceResult(y_hat, None, None, y_hat, mode)
    if mode == 'ordinary':
        return InferenceResult(y_hat, None, None, ordinary_correct(index, y_hat), mode)
    candidates = build_candidate_set(index, y_hat, n)
    scores = score_candidates(p, features.rows, candidates.entries, temperature, text_cache)
    final = candidates.entries[int(np.argmax(scores))]
    logger.debug("y_hat=%r -> %r over %d candidates", y_hat, final, len(candidates))
    return InferenceResult(y_hat, candidates, scores, final, mode)


# Define TrainConfig
# -------------------------------------------------------------------------
_GROUP_NAMES = ('backbone', 'head', 'text', 'projection')


@dataclass(frozen=True)
class TrainConfig:
    """
    Everything the two training stages read. The groups tuples list which
    parameter groups each stage may update; the rest stay frozen.
    """
    batch_size: int = defaults['batch_size']
    resemblant_count: int = defaults['resemblant_count']
    stage1_epochs: int = defaults['stage1_epochs']
    stage2_epochs: int = defaults['stage2_epochs']
    stage1_lr: float = defaults['stage1_lr']
    stage2_lr: float = defaults['stage2_lr']
    stage1_lambdas: Tuple[float, float] = defaults['stage1_lambdas']
    stage2_lambdas: Tuple[float, float] = defaults['stage2_lambdas']
    stage1_groups: Tuple[str, ...] = ('backbone', 'head')
    stage2_groups: Tuple[str, ...] = ('backbone', 'text', 'projection')
    optimizer: str = defaults['optimizer']
    itc: nc.ITCConfig = field(default_factory=nc.ITCConfig)
    resample_resemblants: bool = defaults['resample_resemblants']
    init_seed: int = defaults['init_seed']
    train_seed: int = defaults['train_seed']
    dims: nc.ModelDims = field(default_factory=nc.ModelDims)

    def __post_init__(self):
        check_at_least('batch_size', self.batch_size, 2)
        check_at_least('resemblant_count', self.resemblant_count, 0)
        check_at_least('stage1_epochs', self.stage1_epochs, 0)
        check_at_least('stage2_epochs', self.stage2_epochs, 0)
        check_positive('stage1_lr', self.stage1_lr)
        check_positive('stage2_lr', self.stage2_lr)
        for name in ('stage1_lambdas', 'stage2_lambdas'):
            lambdas = tuple(getattr(self, name))
            if len(lambdas) != 2:
                raise InvalidConfig(f"{name} must hold two weights, got {lambdas}")
            for value in lambdas:
                check_positive(name, value, allow_zero=True)
            object.__setattr__(self, name, lambdas)
        for name in ('stage1_groups', 'stage2_groups'):
            groups = tuple(getattr(self, name))
            unknown = set(groups) - set(_GROUP_NAMES)
            if unknown:
                raise InvalidConfig(f"{name} has unknown groups {sorted(unknown)}")
            object.__setattr__(self, name, groups)
        if self.optimizer not in ('sgd', 'adam'):
            raise InvalidConfig(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")

    @classmethod
    def from_params(cls, **overrides) -> 'TrainConfig':
        """
        Defaults from params, with keyword overrides (None values ignored).
        A bare temperature override is wrapped into the ITCConfig.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if 'temperature' in overrides:
            overrides['itc'] = nc.ITCConfig(overrides.pop('temperature'))
        return cls(**overrides)

    @property
    def temperature(self) -> float:
        return self.itc.temperature

    def stage(self, number: int) -> Tuple[int, float, Tuple[float, float], Tuple[str, ...]]:
        """(epochs, lr, lambdas, groups) of stage 1 or 2."""
        if number == 1:
            return self.stage1_epochs, self.stage1_lr, self.stage1_lambdas, self.stage1_groups
        if number == 2:
            return self.stage2_epochs, self.stage2_lr, self.stage2_lambdas, self.stage2_groups
        raise InvalidConfig(f"stage must be 1 or 2, got {number}")

    def trainable(self, number: int) -> Tuple[str, ...]:
        groups = nc.param_groups(self.dims)
        return tuple(name for g in self.stage(number)[3] for name in groups[g])


# Define training loop
# -------------------------------------------------------------------------
def _fixed_resemblants(labels: Sequence[str], count: int, table: ConfusionTable,
                       seed: int) -> List[List[str]]:
    seeds = np.random.SeedSequence(seed).generate_state(len(labels), dtype=np.uint64)
    return [resemblant_batch([label], count, table, int(s)) for label, s in zip(labels, seeds)]


def train_stage(config: TrainConfig,
                train: Sequence[LabeledSample],
                number: int,
                p: Optional[nc.ModelParams] = None,
                table: ConfusionTable = None) -> Tuple[nc.ModelParams, List[float]]:
    """
    Mini-batch training of one stage; returns new params and the mean loss
    of every epoch.

    Parameters outside the stage's groups are never written. Batch order
    and resemblant draws come from (train_seed, stage), so a run is
    reproducible bit for bit.
    """
    epochs, lr, (lambda1, lambda2), _ = config.stage(number)
    p = (p or nc.init_params(config.dims, config.init_seed)).copy()
    if epochs == 0 or not train:
        return p, []
    table = table or default_confusion_table()
    names = config.trainable(number)
    optimizer = nc.make_optimizer(config.optimizer, lr)
    rng = np.random.default_rng([config.train_seed, number])
    x_all = nc.stack_images([s.image for s in train])
    labels_all = [s.label for s in train]
    fixed = None
    if lambda2 > 0 and not config.resample_resemblants:
        fixed = _fixed_resemblants(labels_all, config.resemblant_count, table, config.train_seed)

    history = []
    for epoch in range(epochs):
        started = time.perf_counter()
        order = rng.permutation(len(train))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            batch_seed = int(rng.integers(2 ** 63))
            if lambda2 > 0 and len(batch) < 2:
                continue
            labels = [labels_all[i] for i in batch]
            resemblants: List[str] = []
            if lambda2 > 0:
                if fixed is None:
                    resemblants = resemblant_batch(labels, config.resemblant_count, table, batch_seed)
                else:
                    resemblants = [w for i in batch for w in fixed[i]]
            loss, grads = nc.overall_forward_backward(p, x_all[batch], labels, resemblants,
                                                      lambda1, lambda2, config.temperature)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"stage {number} epoch {epoch + 1}: loss is {loss}")
            optimizer.step(p, grads, names)
            losses.append(loss)
        mean_loss = float(np.mean(losses)) if losses else 0.0
        history.append(mean_loss)
        logger.info("stage %d epoch %d/%d: loss %.5f (%.1fs)", number, epoch + 1, epochs,
                    mean_loss, time.perf_counter() - started)
    return p, history


def train_stage1(config: TrainConfig,
                 train: Sequence[LabeledSample],
                 p: Optional[nc.ModelParams] = None) -> Tuple[nc.ModelParams, List[float]]:
    """Recognition stage from a fresh init (or the given params)."""
    return train_stage(config, train, 1, p)


def train_stage2(config: TrainConfig,
                 train: Sequence[LabeledSample],
                 p: nc.ModelParams,
                 table: ConfusionTable = None) -> Tuple[nc.ModelParams, List[float]]:
    """Matching stage on top of stage-1 params."""
    return train_stage(config, train, 2, p, table)


def train_two_stage(config: TrainConfig,
                    train: Sequence[LabeledSample],
                    table: ConfusionTable = None) -> Tuple[nc.ModelParams, Dict[str, List[float]]]:
    p, stage1 = train_stage1(config, train)
    p, stage2 = train_stage2(config, train, p, table)
    return p, {'stage1': stage1, 'stage2': stage2}


# Define retrieval_accuracy()
# -------------------------------------------------------------------------
def retrieval_accuracy(p: nc.ModelParams,
                       samples: Sequence[LabeledSample],
                       table: ConfusionTable = None,
                       count: int = defaults['resemblant_count'],
                       seed: int = 0) -> float:
    """
    Top-1 i2t accuracy when each image must pick its label out of the label
    plus `count` of its resemblants.
    """
    if not samples:
        return 0.0
    table = table or default_confusion_table()
    image_embs = nc.embed_images(p, nc.stack_images([s.image for s in samples]))
    negatives = _fixed_resemblants([s.label for s in samples], count, table, seed)
    hits = 0
    for emb, sample, words in zip(image_embs, samples, negatives):
        texts = [sample.label] + words
        sims = nc.similarity_matrix(emb[None], nc.embed_texts(p, texts))[0]
        hits += int(np.argmax(sims) == 0)
    return hits / len(samples)


# Define RunManifest
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class RunManifest:
    """Every input that decides a reported number."""
    train_config: Dict
    dataset_spec: Dict
    dataset_digest: str
    lexicon_digest: str
    top_n: int
    temperature: float

    @classmethod
    def build(cls, config: TrainConfig, spec: DatasetSpec, dataset_digest: str,
              lexicon_digest: str, top_n: int, temperature: float) -> 'RunManifest':
        return cls(json.loads(json.dumps(asdict(config))), asdict(spec), dataset_digest,
                   lexicon_digest, top_n, temperature)

    def to_dict(self) -> Dict:
        return asdict(self)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def write_manifest(self, path) -> None:
        data_connections.write_json(path, dict(self.to_dict(), digest=self.digest()))
