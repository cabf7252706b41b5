# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           test_acceptance.py

# DESCRIPTION:    End-to-end runs on the standard synthetic world. These
#                 train real models and take minutes, so they carry the
#                 `slow` marker; run them with
#
#                     > pytest -m slow tests/backtests
#
#                 The standard run is trained once per session and shared.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import time
import unittest

# 3rd party:
import numpy as np
import pytest

# Local
from dictguide import harness, pipeline
from dictguide import neural_core as nc
from dictguide.glyph_world import (DatasetSpec, dataset_digest, generate_dataset,
                                   noise_profile)
from dictguide.lexicon_index import (brute_force_top_n, build_index,
                                     generate_lexicon, top_n_candidates)
from dictguide.params import params

_STANDARD = {}


def standard_run():
    """Lexicon, data, stage-1 and final params of the default configuration."""
    if not _STANDARD:
        lexicon = generate_lexicon(params['lexicon_size'], params['lexicon_seed'])
        spec = DatasetSpec.from_params()
        train, test = generate_dataset(spec, lexicon)
        config = pipeline.TrainConfig.from_params()
        stage1, _ = pipeline.train_stage1(config, train)
        final, _ = pipeline.train_stage2(config, train, stage1)
        manifest = pipeline.RunManifest.build(config, spec, dataset_digest(train, test),
                                              lexicon.source_digest, params['top_n'], config.temperature)
        _STANDARD.update(lexicon=lexicon, index=build_index(lexicon), train=train, test=test,
                         config=config, stage1=stage1, final=final, manifest=manifest)
    return _STANDARD


# Define tests
# -------------------------------------------------------------------------
@pytest.mark.slow
class TestIndexOracle(unittest.TestCase):

    def test_twenty_thousand_words(self):
        lexicon = generate_lexicon(20000, seed=21, max_length=12)
        started = time.perf_counter()
        index = build_index(lexicon)
        rng = np.random.default_rng(5)
        for _ in range(1000):
            query = ''.join(rng.choice(list('abcdefghiklmnoprstu0'), size=int(rng.integers(1, 13))))
            n = int(rng.choice([1, 5, 10, 30]))
            self.assertEqual(top_n_candidates(index, query, n), brute_force_top_n(lexicon, query, n))
        self.assertLess(time.perf_counter() - started, 60)


@pytest.mark.slow
class TestNormalization(unittest.TestCase):

    def test_ten_thousand_softmaxes(self):
        rng = np.random.default_rng(0)
        dims = nc.ModelDims(channels=8, proj_dim=4, ffn_hidden=8)
        p = nc.init_params(dims, 0)
        for start in range(0, 10000, 500):
            cells = rng.dirichlet(np.ones(37), size=(500, 25))
            _, probs, _ = nc.recognize_batch(p, cells)
            np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-6)
            embs = rng.normal(size=(6, 4))
            tau = float(rng.uniform(0.01, 2.0))
            self.assertAlmostEqual(nc.i2t_distribution(embs[0], embs[1:], tau).sum(), 1.0, delta=1e-6)
            self.assertAlmostEqual(nc.t2i_distribution(embs[0], embs[1:], tau).sum(), 1.0, delta=1e-6)


@pytest.mark.slow
class TestRecognizer(unittest.TestCase):

    def test_noiseless_training_set_is_learned(self):
        lexicon = generate_lexicon(500, seed=8)
        train, _ = generate_dataset(DatasetSpec(seed=4, train_size=1000, test_size=1, noise_rate=0.0,
                                                smear=0.0), lexicon)
        config = pipeline.TrainConfig.from_params(stage1_epochs=10)
        p, history = pipeline.train_stage1(config, train)
        for previous, current in zip(history, history[1:]):
            self.assertLessEqual(current, previous * 1.05)
        _, _, words = nc.recognize_batch(p, nc.stack_images([s.image for s in train]))
        accuracy = np.mean([w == s.label for w, s in zip(words, train)])
        self.assertGreaterEqual(accuracy, 0.99)


@pytest.mark.slow
class TestStandardRun(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.standard = standard_run()
        cls.report = harness.evaluate(cls.standard['final'], cls.standard['index'], cls.standard['test'],
                                      params['top_n'], params['temperature'],
                                      cls.standard['manifest'].digest())

    def test_noise_is_calibrated(self):
        self.assertGreater(noise_profile(self.standard['test']), 0.0)
        self.assertGreaterEqual(self.report.accuracies['baseline'], 0.60)
        self.assertLessEqual(self.report.accuracies['baseline'], 0.90)

    def test_matching_stage_keeps_the_recognizer(self):
        before = harness.evaluate(self.standard['stage1'], self.standard['index'], self.standard['test'])
        self.assertGreaterEqual(self.report.accuracies['baseline'], before.accuracies['baseline'] - 0.02)

    def test_mode_ordering(self):
        acc = self.report.accuracies
        self.assertGreaterEqual(acc['proposed'], acc['ordinary'] + 0.01)
        self.assertGreaterEqual(acc['ordinary'], acc['baseline'] + 0.01)

    def test_modes_share_inputs(self):
        digests = self.report.input_digests
        self.assertEqual(set(digests), {'baseline', 'ordinary', 'proposed'})
        self.assertEqual(len(set(digests.values())), 1)

    def test_out_of_lexicon_rescue(self):
        proposed, ordinary = harness.rescue_rate(self.report, self.standard['lexicon'])
        self.assertGreaterEqual(proposed, 0.8)
        self.assertEqual(ordinary, 0.0)

    def test_matching_stage_helps_retrieval(self):
        before = pipeline.retrieval_accuracy(self.standard['stage1'], self.standard['test'][:300], seed=1)
        after = pipeline.retrieval_accuracy(self.standard['final'], self.standard['test'][:300], seed=1)
        self.assertGreaterEqual(after, before)

    def test_candidate_count_shape(self):
        grid = harness.ablate_candidates(self.standard['final'], self.standard['index'], self.standard['test'])
        for n, m in ((1, 5), (5, 10)):
            self.assertGreaterEqual(grid.accuracy(m), grid.accuracy(n) - 0.001, f"{n} -> {m}")
        self.assertLessEqual(abs(grid.accuracy(300) - grid.accuracy(150)), 0.005)

    def test_resemblant_count_shape(self):
        grid = harness.ablate_resemblants(self.standard['config'], self.standard['train'],
                                          self.standard['test'], self.standard['index'], (0, 3),
                                          stage1=self.standard['stage1'])
        self.assertLess(grid.accuracy(0), grid.accuracy(3))
        self.assertLess(grid.accuracy(0), grid.reference['ordinary'])

    def test_equal_manifests_equal_reports(self):
        again = harness.evaluate(self.standard['final'], self.standard['index'], self.standard['test'],
                                 params['top_n'], params['temperature'], self.standard['manifest'].digest())
        self.assertEqual(again.accuracies, self.report.accuracies)
        self.assertEqual(again.records, self.report.records)
        retrained, _ = pipeline.train_stage1(self.standard['config'], self.standard['train'])
        self.assertEqual(retrained.to_bytes(), self.standard['stage1'].to_bytes())


if __name__ == '__main__':
    unittest.main()
