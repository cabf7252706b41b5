# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           harness.py

# DESCRIPTION:    Evaluation of the three correction modes on a test set,
#                 the candidate-count and resemblant-count ablations, and
#                 report files (JSON for machines, a text table for people).

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import dataclasses
import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

# 3rd party:
import numpy as np
import pandas as pd

# Local
from dictguide import neural_core as nc
from dictguide.exceptions import CorruptFile, EmptyTestSet, InvalidConfig, VersionMismatch
from dictguide.glyph_world import ConfusionTable, LabeledSample
from dictguide.lexicon_index import Lexicon, MetricIndex
from dictguide.params import params as defaults
from dictguide.pipeline import (TrainConfig, build_candidate_set, ordinary_correct,
                                score_candidates, train_stage1, train_stage2)
from dictguide.utilities import data_connections
from dictguide.utilities import field_definitions as fd
from dictguide.utilities.processing_steps import check_strictly_increasing

logger = logging.getLogger(__name__)

REPORT_FORMAT = 'dictguide-report'
REPORT_FORMAT_VERSION = 1
REPORT_FORMATS = ('json', 'table')


# Define EvalReport / AblationGrid
# -------------------------------------------------------------------------
@dataclass(eq=False)
class EvalReport:
    """
    One evaluation run: one record per (sample, mode), the accuracy of each
    mode, the manifest digest of the run and wall-clock seconds per mode
    (the shared first forward is counted in every mode). input_digests
    holds, per mode, the sha256 of the test images and visual predictions
    that mode consumed.
    """
    records: List[Dict]
    accuracies: Dict[str, float]
    manifest_digest: str = ''
    timings: Dict[str, float] = field(default_factory=dict)
    top_n: int = defaults['top_n']
    input_digests: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for mode, value in self.accuracies.items():
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"accuracy of {mode} is {value}, outside [0, 1]")

    @property
    def test_size(self) -> int:
        return len(self.records) // max(len(self.accuracies), 1)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=list(fd.record_fields))

    def errors(self, mode: str) -> pd.DataFrame:
        """(label, visual prediction, final prediction) of every miss in one mode."""
        df = self.frame()
        misses = df[(df[fd.MODE] == mode) & ~df[fd.CORRECT]]
        return misses[[fd.LABEL, fd.VISUAL_PREDICTION, fd.FINAL_PREDICTION]].reset_index(drop=True)

    def to_dict(self) -> Dict:
        return {
            'format': REPORT_FORMAT,
            'version': REPORT_FORMAT_VERSION,
            'manifest_digest': self.manifest_digest,
            'top_n': self.top_n,
            'test_size': self.test_size,
            'accuracies': dict(self.accuracies),
            'timings': dict(self.timings),
            'input_digests': dict(self.input_digests),
            'records': [dict(r) for r in self.records],
        }


@dataclass(frozen=True)
class AblationGrid:
    axis: str
    values: Tuple[int, ...]
    accuracies: Tuple[float, ...]
    reference: Dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_strictly_increasing(self.axis, self.values)
        if len(self.values) != len(self.accuracies):
            raise InvalidConfig("one accuracy per axis value is required")

    def accuracy(self, value: int) -> float:
        return self.accuracies[self.values.index(value)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({fd.AXIS_VALUE: self.values, fd.ACCURACY: self.accuracies})


# Define evaluate()
# -------------------------------------------------------------------------
def _matches(prediction: str, label: str) -> bool:
    return prediction.lower() == label.lower()


def input_digest(test: Sequence[LabeledSample], predictions: Sequence[str]) -> str:
    """sha256 of the test images and the visual predictions read from them."""
    h = hashlib.sha256()
    for sample, y_hat in zip(test, predictions):
        h.update(np.ascontiguousarray(sample.image.cells, dtype='<f8').tobytes())
        h.update(y_hat.encode('utf-8') + b'\n')
    return h.hexdigest()


def _first_forward(p: nc.ModelParams, test: Sequence[LabeledSample]):
    if not test:
        raise EmptyTestSet("the test set is empty")
    started = time.perf_counter()
    features, _, predictions = nc.recognize_batch(p, nc.stack_images([s.image for s in test]))
    return features, predictions, time.perf_counter() - started


def _proposed(p, index, features, predictions, n, temperature, cache) -> List[str]:
    finals = []
    for rows, y_hat in zip(features, predictions):
        candidates = build_candidate_set(index, y_hat, n)
        scores = score_candidates(p, rows, candidates.entries, temperature, cache)
        finals.append(candidates.entries[int(np.argmax(scores))])
    return finals


def evaluate(p: nc.ModelParams,
             index: MetricIndex,
             test: Sequence[LabeledSample],
             n: int = defaults['top_n'],
             temperature: Union[float, nc.ITCConfig] = defaults['temperature'],
             manifest_digest: str = '') -> EvalReport:
    """
    Run baseline, ordinary and proposed on the same test samples.

    The first forward runs once and its predictions feed all three modes;
    each mode records the digest of the inputs it consumed.
    """
    features, predictions, recog_seconds = _first_forward(p, test)
    lexicon_words = set(index.words)
    finals: Dict[str, List[str]] = {'baseline': list(predictions)}
    digests = {'baseline': input_digest(test, finals['baseline'])}
    timings = {'baseline': recog_seconds}

    started = time.perf_counter()
    finals['ordinary'] = [ordinary_correct(index, y_hat) for y_hat in predictions]
    timings['ordinary'] = recog_seconds + time.perf_counter() - started
    digests['ordinary'] = input_digest(test, predictions)

    started = time.perf_counter()
    finals['proposed'] = _proposed(p, index, features, predictions, n, temperature, {})
    timings['proposed'] = recog_seconds + time.perf_counter() - started
    digests['proposed'] = input_digest(test, predictions)

    records = []
    accuracies = {}
    for mode in fd.MODES:
        hits = 0
        for sample, y_hat, final in zip(test, predictions, finals[mode]):
            correct = _matches(final, sample.label)
            hits += correct
            records.append({fd.LABEL: sample.label, fd.MODE: mode, fd.VISUAL_PREDICTION: y_hat,
                            fd.FINAL_PREDICTION: final, fd.CORRECT: bool(correct),
                            fd.IN_LEXICON: sample.label in lexicon_words})
        accuracies[mode] = hits / len(test)
    logger.info("evaluated %d samples at n=%d: %s", len(test), n,
                ', '.join(f"{m} {accuracies[m]:.4f}" for m in fd.MODES))
    return EvalReport(records, accuracies, manifest_digest, timings, n, digests)


# Define ablate_candidates()
# -------------------------------------------------------------------------
def ablate_candidates(p: nc.ModelParams,
                      index: MetricIndex,
                      test: Sequence[LabeledSample],
                      values: Sequence[int] = defaults['candidate_grid'],
                      temperature: Union[float, nc.ITCConfig] = defaults['temperature']) -> AblationGrid:
    """Proposed-mode accuracy for every candidate count in `values`."""
    values = check_strictly_increasing('candidate count', values)
    features, predictions, _ = _first_forward(p, test)
    cache: Dict[str, np.ndarray] = {}
    accuracies = []
    for n in values:
        finals = _proposed(p, index, features, predictions, n, temperature, cache)
        acc = sum(_matches(f, s.label) for f, s in zip(finals, test)) / len(test)
        logger.info("candidates %d: proposed accuracy %.4f", n, acc)
        accuracies.append(acc)
    ordinary = [ordinary_correct(index, y_hat) for y_hat in predictions]
    reference = {'ordinary': sum(_matches(f, s.label) for f, s in zip(ordinary, test)) / len(test)}
    return AblationGrid('candidate count', tuple(values), tuple(accuracies), reference)


# Define ablate_resemblants()
# -------------------------------------------------------------------------
def ablate_resemblants(config: TrainConfig,
                       train: Sequence[LabeledSample],
                       test: Sequence[LabeledSample],
                       index: MetricIndex,
                       values: Sequence[int] = defaults['resemblant_grid'],
                       n: int = defaults['top_n'],
                       stage1: Optional[nc.ModelParams] = None,
                       table: ConfusionTable = None) -> AblationGrid:
    """
    Retrain the matching stage once per resemblant count, on the same
    stage-1 params and with the same seeds, and score proposed mode.
    """
    values = check_strictly_increasing('resemblant count', values)
    if stage1 is None:
        stage1, _ = train_stage1(config, train)
    accuracies = []
    reference: Dict[str, float] = {}
    for count in values:
        run_config = dataclasses.replace(config, resemblant_count=count)
        p, _ = train_stage2(run_config, train, stage1, table)
        report = evaluate(p, index, test, n, config.itc)
        accuracies.append(report.accuracies['proposed'])
        reference = {'ordinary': report.accuracies['ordinary'],
                     'baseline': report.accuracies['baseline']}
        logger.info("resemblants %d: proposed accuracy %.4f", count, accuracies[-1])
    return AblationGrid('resemblant count', tuple(values), tuple(accuracies), reference)


# Define rescue_rate()
# -------------------------------------------------------------------------
def rescue_rate(report: EvalReport, lexicon: Optional[Lexicon] = None) -> Tuple[float, float]:
    """
    Among out-of-lexicon labels the recognizer read correctly, the fraction
    kept as the final output by (proposed, ordinary). Returns (nan, nan)
    when there are no such samples.
    """
    df = report.frame()
    if lexicon is not None:
        out_of_lexicon = ~df[fd.LABEL].isin(set(lexicon.words))
    else:
        out_of_lexicon = ~df[fd.IN_LEXICON].astype(bool)
    read_right = df[fd.VISUAL_PREDICTION].str.lower() == df[fd.LABEL].str.lower()
    eligible = df[out_of_lexicon & read_right]
    rates = []
    for mode in ('proposed', 'ordinary'):
        rows = eligible[eligible[fd.MODE] == mode]
        rates.append(float(rows[fd.CORRECT].mean()) if len(rows) else float('nan'))
    return rates[0], rates[1]


# Define emit_report() / parse_report()
# -------------------------------------------------------------------------
def format_table(report: EvalReport) -> str:
    summary = pd.DataFrame({
        fd.MODE: list(report.accuracies),
        fd.ACCURACY: [round(report.accuracies[m], 4) for m in report.accuracies],
        'seconds': [round(report.timings.get(m, float('nan')), 3) for m in report.accuracies],
    })
    lines = [f"manifest {report.manifest_digest or '-'}  top_n {report.top_n}  "
             f"test_size {report.test_size}", '', summary.to_string(index=False)]
    for mode in report.accuracies:
        misses = report.errors(mode)
        lines += ['', f"{mode} errors ({len(misses)})"]
        if len(misses):
            lines.append(misses.to_string(index=False))
    return '\n'.join(lines) + '\n'


def emit_report(report: EvalReport, path, fmt: str = 'json') -> None:
    if fmt == 'json':
        data_connections.write_json(path, report.to_dict())
    elif fmt == 'table':
        data_connections.write_text(path, format_table(report))
    else:
        raise InvalidConfig(f"report format must be one of {REPORT_FORMATS}, got {fmt!r}")
    logger.info("wrote %s report to %s", fmt, path)


def parse_report(path) -> EvalReport:
    """Read a JSON report back; accuracies outside [0, 1] are rejected."""
    payload = data_connections.read_json(path)
    if not isinstance(payload, dict) or payload.get('format') != REPORT_FORMAT:
        raise CorruptFile(f"{path} is not a report file")
    if payload.get('version') != REPORT_FORMAT_VERSION:
        raise VersionMismatch(f"report version {payload.get('version')}, "
                              f"expected {REPORT_FORMAT_VERSION}")
    try:
        return EvalReport(records=payload['records'], accuracies=payload['accuracies'],
                          manifest_digest=payload['manifest_digest'], timings=payload['timings'],
                          top_n=payload['top_n'],
                          input_digests=payload.get('input_digests', {}))
    except (KeyError, TypeError, InvalidConfig) as err:
        raise CorruptFile(f"{path} has an invalid report body: {err}") from err
