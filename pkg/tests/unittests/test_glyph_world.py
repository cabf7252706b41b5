# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           test_glyph_world.py

# DESCRIPTION:    Tests on the synthetic glyph world: the confusion table,
#                 rendering, the smear-then-swap perturbation, dataset
#                 generation (sizes, out-of-lexicon share, determinism) and
#                 the dataset file.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
import math
import os
import tempfile
import unittest

# 3rd party:
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Local
from dictguide.exceptions import CorruptFile, EmptyLexicon, InvalidConfig, VersionMismatch
from dictguide.glyph_world import (BLANK, CHAR_TO_ID, GRID_WIDTH, NUM_CHANNELS,
                                   ConfusionTable, DatasetSpec, LabeledSample,
                                   argmax_decode,
                                   dataset_digest, default_confusion_table,
                                   generate_dataset, load_confusion_table,
                                   load_dataset, noise_profile,
                                   parse_confusion_table, perturb, render,
                                   save_confusion_table, save_dataset)
from dictguide.lexicon_index import ALPHABET, generate_lexicon, make_lexicon

label_st = st.text(alphabet=ALPHABET, min_size=1, max_size=GRID_WIDTH)


# Define tests
# -------------------------------------------------------------------------
class TestConfusionTable(unittest.TestCase):

    def setUp(self):
        self.table = default_confusion_table()

    def test_shipped_rows(self):
        self.assertEqual(self.table['a'], ('d', 'e', 'o', 'q', 'u'))
        self.assertIn('r', self.table['t'])
        self.assertIn('c', self.table['e'])
        self.assertIn('m', self.table['n'])
        self.assertIn('q', self.table['d'])

    def test_every_row_is_valid(self):
        for ch in ALPHABET:
            row = self.table[ch]
            self.assertEqual(len(set(row)), 5)
            self.assertNotIn(ch, row)
            self.assertTrue(set(row) <= set(ALPHABET))

    def test_row_ids_shape(self):
        ids = self.table.row_ids()
        self.assertEqual(ids.shape, (36, 5))
        self.assertEqual(ids[CHAR_TO_ID['a']].tolist(), [CHAR_TO_ID[c] for c in 'deoqu'])

    def test_save_then_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'table.txt')
            save_confusion_table(self.table, path)
            self.assertEqual(load_confusion_table(path), self.table)

    def test_self_reference_rejected(self):
        entries = dict(self.table.entries)
        entries['a'] = ('a', 'e', 'o', 'q', 'u')
        with self.assertRaises(InvalidConfig):
            ConfusionTable(entries)

    def test_missing_row_rejected(self):
        entries = dict(self.table.entries)
        del entries['z']
        with self.assertRaises(InvalidConfig):
            ConfusionTable(entries)

    def test_malformed_line(self):
        with self.assertRaises(CorruptFile):
            parse_confusion_table(['a deoqu'])


class TestRenderAndPerturb(unittest.TestCase):

    def setUp(self):
        self.table = default_confusion_table()

    def test_render_is_one_hot(self):
        image = render('ab')
        self.assertEqual(image.cells.shape, (GRID_WIDTH, NUM_CHANNELS))
        self.assertEqual(image.cells[0, CHAR_TO_ID['a']], 1.0)
        self.assertEqual(image.cells[1, CHAR_TO_ID['b']], 1.0)
        self.assertTrue(np.all(image.cells[2:, BLANK] == 1.0))
        self.assertTrue(image.is_valid())
        self.assertEqual(argmax_decode(image), 'ab')

    def test_no_noise_is_identity(self):
        image = render('hello')
        np.testing.assert_array_equal(perturb(image, self.table, 0.0, 0.0, 1).cells, image.cells)

    def test_full_swap_moves_every_character_to_a_neighbour(self):
        image = perturb(render('hello'), self.table, 1.0, 0.3, 4)
        read = argmax_decode(image)
        self.assertEqual(len(read), 5)
        for original, seen in zip('hello', read):
            self.assertIn(seen, self.table[original])

    def test_swapped_cell_keeps_a_residue_of_the_true_character(self):
        cells = perturb(render('a'), self.table, 1.0, 0.3, 0).cells
        self.assertAlmostEqual(cells[0, CHAR_TO_ID['a']], 0.06)
        self.assertAlmostEqual(cells[0].max(), 0.7)

    def test_blank_cells_untouched(self):
        image = perturb(render('abc'), self.table, 1.0, 0.5, 2)
        self.assertTrue(np.all(image.cells[3:, BLANK] == 1.0))

    @settings(max_examples=80, deadline=None)
    @given(label_st, st.floats(0.0, 1.0), st.floats(0.0, 0.8), st.integers(0, 2 ** 32))
    def test_cells_stay_distributions(self, label, noise_rate, smear, seed):
        image = perturb(render(label), self.table, noise_rate, smear, seed)
        self.assertTrue(image.is_valid())

    @settings(max_examples=40, deadline=None)
    @given(label_st, st.integers(0, 2 ** 32))
    def test_equal_seeds_equal_outputs(self, label, seed):
        a = perturb(render(label), self.table, 0.4, 0.3, seed)
        b = perturb(render(label), self.table, 0.4, 0.3, seed)
        np.testing.assert_array_equal(a.cells, b.cells)

    def test_noise_profile_tracks_the_rate(self):
        rng = np.random.default_rng(0)
        rate, samples = 0.2, []
        for i in range(1300):
            label = ''.join(rng.choice(list('abcdefghij'), size=8))
            samples.append(LabeledSample(perturb(render(label), self.table, rate, 0.3, i), label))
        cells = 8 * len(samples)
        self.assertGreaterEqual(cells, 10000)
        standard_error = math.sqrt(rate * (1 - rate) / cells)
        self.assertLessEqual(abs(noise_profile(samples) - rate), 3 * standard_error)


class TestDatasetSpec(unittest.TestCase):

    def test_defaults_are_valid(self):
        spec = DatasetSpec.from_params()
        self.assertGreater(spec.test_size, 0)

    def test_invalid_values(self):
        for overrides in ({'noise_rate': 1.5}, {'smear': 0.9}, {'test_size': 0},
                          {'out_of_lexicon_fraction': -0.1}):
            with self.assertRaises(InvalidConfig):
                DatasetSpec.from_params(**overrides)


class TestGenerateDataset(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.lexicon = generate_lexicon(300, seed=1)
        cls.spec = DatasetSpec(seed=3, train_size=120, test_size=100, noise_rate=0.1,
                               smear=0.3, out_of_lexicon_fraction=0.2)
        cls.train, cls.test = generate_dataset(cls.spec, cls.lexicon)

    def test_sizes(self):
        self.assertEqual(len(self.train), 120)
        self.assertEqual(len(self.test), 100)

    def test_train_labels_come_from_the_lexicon(self):
        self.assertTrue(all(s.label in self.lexicon for s in self.train))

    def test_out_of_lexicon_share_is_exact(self):
        outside = [s.label for s in self.test if s.label not in self.lexicon]
        self.assertEqual(len(outside), 20)

    def test_out_of_lexicon_labels_are_confusable_variants(self):
        table = default_confusion_table()
        for sample in self.test:
            if sample.label in self.lexicon:
                continue
            label = sample.label
            sources = [w for w in self.lexicon if len(w) == len(label)
                       and sum(a != b for a, b in zip(w, label)) == 1]
            self.assertTrue(any(label[i] in table[w[i]]
                                for w in sources for i in range(len(w)) if w[i] != label[i]))

    def test_deterministic(self):
        train, test = generate_dataset(self.spec, self.lexicon)
        self.assertEqual(dataset_digest(train, test), dataset_digest(self.train, self.test))

    def test_all_images_valid(self):
        self.assertTrue(all(s.image.is_valid() for s in self.train + self.test))

    def test_empty_lexicon(self):
        with self.assertRaises(EmptyLexicon):
            generate_dataset(self.spec, None)

    def test_zero_out_of_lexicon(self):
        spec = DatasetSpec(seed=3, train_size=5, test_size=30, out_of_lexicon_fraction=0.0)
        _, test = generate_dataset(spec, make_lexicon(['tireless', 'redness', 'kindness']))
        self.assertTrue(all(s.label in ('tireless', 'redness', 'kindness') for s in test))


class TestDatasetFile(unittest.TestCase):

    def setUp(self):
        self.lexicon = generate_lexicon(100, seed=6)
        self.spec = DatasetSpec(seed=1, train_size=20, test_size=10)
        self.train, self.test = generate_dataset(self.spec, self.lexicon)

    def test_save_then_load_keeps_content(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'data.jsonl')
            first = save_dataset(path, self.spec, self.train, self.test)
            spec, train, test = load_dataset(path)
            self.assertEqual(spec, self.spec)
            self.assertEqual([s.label for s in train], [s.label for s in self.train])
            for a, b in zip(test, self.test):
                np.testing.assert_allclose(a.image.cells, b.image.cells, atol=1e-12)
            second = save_dataset(os.path.join(tmp, 'again.jsonl'), spec, train, test)
        self.assertEqual(first, second)

    def test_version_mismatch(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'data.jsonl')
            save_dataset(path, self.spec, self.train, self.test)
            with open(path, encoding='utf-8') as handle:
                text = handle.read().replace('"version": 1', '"version": 2', 1)
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(text)
            with self.assertRaises(VersionMismatch):
                load_dataset(path)

    def test_not_a_dataset(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'data.jsonl')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('hello\n')
            with self.assertRaises(CorruptFile):
                load_dataset(path)


if __name__ == '__main__':
    unittest.main()
