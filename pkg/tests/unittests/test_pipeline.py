# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           test_pipeline.py

# DESCRIPTION:    Tests on candidate sets, the ordinary correction, the
#                 three inference modes and the two training stages on a
#                 small model (frozen groups, determinism, zero epochs).

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import dataclasses
import os
import tempfile
import unittest
from unittest import mock

# 3rd party:
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Local
from dictguide import neural_core as nc
from dictguide import pipeline
from dictguide.exceptions import InvalidConfig, NonFiniteLoss
from dictguide.glyph_world import DatasetSpec, generate_dataset, render
from dictguide.lexicon_index import (build_index, generate_lexicon, levenshtein,
                                     make_lexicon)
from dictguide.utilities import data_connections

TOY = nc.ModelDims(channels=4, proj_dim=3, ffn_hidden=5)


def toy_config(**overrides):
    settings_ = dict(batch_size=4, resemblant_count=2, stage1_epochs=1, stage2_epochs=1,
                     dims=TOY)
    settings_.update(overrides)
    return pipeline.TrainConfig.from_params(**settings_)


# Define tests
# -------------------------------------------------------------------------
class TestCandidateSet(unittest.TestCase):

    def setUp(self):
        self.index = build_index(make_lexicon(['tireless', 'tiredness', 'redness', 'kindness', 'tiresome']))

    def test_tirelness_example(self):
        cands = pipeline.build_candidate_set(self.index, 'tirelness', 2)
        self.assertEqual(cands.entries, ('tiredness', 'tireless', 'tirelness'))
        self.assertEqual(cands.distances, (1, 1, 0))
        self.assertIn('tirelness', cands)

    def test_prediction_in_lexicon_appears_once(self):
        cands = pipeline.build_candidate_set(self.index, 'redness', 2)
        self.assertEqual(cands.entries.count('redness'), 1)
        self.assertEqual(len(cands), 2)

    def test_large_n_is_the_whole_lexicon_plus_prediction(self):
        cands = pipeline.build_candidate_set(self.index, 'zzz', 100)
        self.assertEqual(len(cands), 6)
        self.assertEqual(cands.entries[-1], 'zzz')

    def test_empty_prediction(self):
        cands = pipeline.build_candidate_set(self.index, '', 1)
        self.assertEqual(cands.entries, ('redness', ''))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.text(alphabet='abcd', min_size=1, max_size=6), min_size=1, max_size=30, unique=True),
           st.text(alphabet='abcd', max_size=6), st.integers(1, 10))
    def test_membership_and_completeness(self, words, y_hat, n):
        lexicon = make_lexicon(words)
        cands = pipeline.build_candidate_set(build_index(lexicon), y_hat, n)
        self.assertIn(y_hat, cands)
        self.assertEqual(len(set(cands.entries)), len(cands))
        self.assertLessEqual(len(cands), n + 1)
        dictionary = [w for w in cands.entries if w in lexicon]
        worst = max(levenshtein(y_hat, w) for w in dictionary)
        for word in lexicon:
            if word not in cands:
                self.assertGreaterEqual(levenshtein(y_hat, word), worst)


class TestOrdinaryCorrect(unittest.TestCase):

    def test_tie_goes_to_lexicographic_first(self):
        index = build_index(make_lexicon(['pour', 'hour', 'tour']))
        self.assertEqual(pipeline.ordinary_correct(index, 'your'), 'hour')
        self.assertEqual(pipeline.ordinary_correct(index, 'pour'), 'pour')

    def test_never_keeps_an_unknown_word(self):
        index = build_index(make_lexicon(['need', 'green', 'tree']))
        self.assertNotEqual(pipeline.ordinary_correct(index, 'ngee'), 'ngee')


class TestInfer(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.lexicon = make_lexicon(['tireless', 'tiredness', 'redness', 'kindness', 'tiresome'])
        cls.index = build_index(cls.lexicon)
        cls.params = nc.init_params(TOY, seed=3)

    def test_modes(self):
        image = render('tirelness')
        baseline = pipeline.infer(self.params, self.index, image, 2, 0.07, 'baseline')
        ordinary = pipeline.infer(self.params, self.index, image, 2, 0.07, 'ordinary')
        proposed = pipeline.infer(self.params, self.index, image, 2, 0.07, 'proposed')
        self.assertEqual(baseline.final, baseline.visual_prediction)
        self.assertIn(ordinary.final, self.lexicon)
        self.assertIn(proposed.final, proposed.candidates)
        self.assertAlmostEqual(float(proposed.scores.sum()), 1.0)
        self.assertEqual(len(proposed.scores), len(proposed.candidates))

    def test_text_cache_gives_the_same_answer(self):
        image = render('redness')
        cache = {}
        first = pipeline.infer(self.params, self.index, image, 3, 0.07, 'proposed', cache)
        second = pipeline.infer(self.params, self.index, image, 3, 0.07, 'proposed', cache)
        plain = pipeline.infer(self.params, self.index, image, 3, 0.07, 'proposed')
        np.testing.assert_allclose(first.scores, plain.scores)
        self.assertEqual(second.final, plain.final)
        self.assertTrue(set(first.candidates.entries) <= set(cache))

    def test_unknown_mode(self):
        with self.assertRaises(InvalidConfig):
            pipeline.infer(self.params, self.index, render('a'), 1, 0.07, 'oracle')


class TestTrainConfig(unittest.TestCase):

    def test_defaults(self):
        config = pipeline.TrainConfig.from_params()
        self.assertEqual(config.batch_size, 32)
        self.assertEqual(config.stage1_lambdas, (1.0, 0.0))
        self.assertEqual(config.stage2_lambdas, (1.0, 1.0))
        self.assertEqual(config.stage2_groups, ('backbone', 'text', 'projection'))

    def test_temperature_lives_in_the_itc_config(self):
        config = pipeline.TrainConfig.from_params(temperature=0.2)
        self.assertEqual(config.itc, nc.ITCConfig(0.2))
        self.assertEqual(config.temperature, 0.2)
        self.assertEqual(pipeline.TrainConfig.from_params().temperature, 0.07)
        with self.assertRaises(InvalidConfig):
            pipeline.TrainConfig.from_params(temperature=-1.0)

    def test_none_overrides_ignored(self):
        self.assertEqual(pipeline.TrainConfig.from_params(batch_size=None).batch_size, 32)

    def test_invalid(self):
        for overrides in ({'batch_size': 1}, {'resemblant_count': -1}, {'stage1_groups': ('nope',)},
                          {'stage2_lambdas': (0.0, -1.0)}, {'optimizer': 'lbfgs'}):
            with self.assertRaises(InvalidConfig):
                pipeline.TrainConfig.from_params(**overrides)

    def test_trainable_groups(self):
        config = toy_config()
        self.assertIn('recog_head_w', config.trainable(1))
        self.assertNotIn('proj_text', config.trainable(1))
        self.assertNotIn('recog_head_w', config.trainable(2))
        self.assertIn('block0_wq', config.trainable(2))


class TestTraining(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        lexicon = generate_lexicon(30, seed=2)
        spec = DatasetSpec(seed=1, train_size=10, test_size=4, noise_rate=0.1)
        cls.train, cls.test = generate_dataset(spec, lexicon)

    def assertChanged(self, a, b, names):
        for name in names:
            self.assertFalse(np.array_equal(a[name], b[name]), name)

    def assertSame(self, a, b, names):
        for name in names:
            np.testing.assert_array_equal(a[name], b[name], err_msg=name)

    def test_zero_epochs_leave_params_unchanged(self):
        config = toy_config(stage1_epochs=0)
        p, history = pipeline.train_stage1(config, self.train)
        self.assertEqual(history, [])
        self.assertEqual(p.to_bytes(), nc.init_params(TOY, config.init_seed).to_bytes())

    def test_stage_one_freezes_text_side(self):
        config = toy_config(stage1_epochs=2)
        start = nc.init_params(TOY, config.init_seed)
        p, history = pipeline.train_stage1(config, self.train)
        self.assertEqual(len(history), 2)
        self.assertSame(start, p, nc.text_group(TOY) + nc.PROJECTION)
        self.assertChanged(start, p, nc.HEAD)

    def test_stage_two_freezes_the_head(self):
        config = toy_config()
        stage1, _ = pipeline.train_stage1(config, self.train)
        p, _ = pipeline.train_stage2(config, self.train, stage1)
        self.assertSame(stage1, p, nc.HEAD)
        self.assertChanged(stage1, p, ('proj_text', 'block0_wq', 'pa_query'))

    def test_matching_stage_keeps_recognition_loss_down(self):
        config = toy_config(stage1_epochs=4, stage2_epochs=4, dims=nc.ModelDims(channels=8, proj_dim=4,
                                                                                ffn_hidden=8))
        x = nc.stack_images([s.image for s in self.train])
        labels = [s.label for s in self.train]
        stage1, _ = pipeline.train_stage1(config, self.train)
        anchored, _ = pipeline.train_stage2(config, self.train, stage1)
        drifting, _ = pipeline.train_stage2(dataclasses.replace(config, stage2_lambdas=(0.0, 1.0)),
                                            self.train, stage1)
        before, _ = nc.recognition_forward_backward(stage1, x, labels)
        kept, _ = nc.recognition_forward_backward(anchored, x, labels)
        lost, _ = nc.recognition_forward_backward(drifting, x, labels)
        self.assertLessEqual(kept, before + 0.05)
        self.assertLess(kept, lost)

    def test_deterministic(self):
        config = toy_config(resemblant_count=3)
        a, ha = pipeline.train_two_stage(config, self.train)
        b, hb = pipeline.train_two_stage(config, self.train)
        self.assertEqual(a.to_bytes(), b.to_bytes())
        self.assertEqual(ha, hb)

    def test_fixed_resemblants_and_adam(self):
        config = toy_config(resample_resemblants=False, optimizer='adam', stage2_lr=0.01)
        p, histories = pipeline.train_two_stage(config, self.train)
        self.assertTrue(np.isfinite(histories['stage2'][0]))

    def test_no_resemblants(self):
        config = toy_config(resemblant_count=0)
        _, histories = pipeline.train_two_stage(config, self.train)
        self.assertEqual(len(histories['stage2']), 1)

    def test_non_finite_loss_aborts(self):
        config = toy_config()
        with mock.patch('dictguide.neural_core.overall_forward_backward',
                        return_value=(float('nan'), nc.init_params(TOY).zeros_like())):
            with self.assertRaises(NonFiniteLoss):
                pipeline.train_stage1(config, self.train)

    def test_retrieval_accuracy_is_a_fraction(self):
        p = nc.init_params(TOY)
        acc = pipeline.retrieval_accuracy(p, self.test, count=3)
        self.assertGreaterEqual(acc, 0.0)
        self.assertLessEqual(acc, 1.0)


class TestRunManifest(unittest.TestCase):

    def build(self, seed):
        return pipeline.RunManifest.build(toy_config(train_seed=seed), DatasetSpec(), 'd' * 64,
                                          'l' * 64, 5, 0.07)

    def test_digest(self):
        self.assertEqual(self.build(1).digest(), self.build(1).digest())
        self.assertNotEqual(self.build(1).digest(), self.build(2).digest())

    def test_write(self):
        manifest = self.build(1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'manifest.json')
            manifest.write_manifest(path)
            payload = data_connections.read_json(path)
        self.assertEqual(payload['digest'], manifest.digest())
        self.assertEqual(payload['train_config']['dims']['channels'], 4)


if __name__ == '__main__':
    unittest.main()
