# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           resemblant_gen.py

# DESCRIPTION:    Hard negatives for the matcher: words built from a label
#                 by replacing exactly one character with a look-alike from
#                 the confusion table.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0

# Imports
# -------------------------------------------------------------------------
# Python:
from dataclasses import dataclass, field
from typing import List, Sequence

# 3rd party:
import numpy as np

# Local
from dictguide.exceptions import InfeasibleCount
from dictguide.glyph_world import (CONFUSION_ROW_SIZE, ConfusionTable,
                                   default_confusion_table)
from dictguide.params import params
from dictguide.utilities.processing_steps import check_at_least


@dataclass(frozen=True)
class ResemblantSpec:
    count: int = params['resemblant_count']
    table: ConfusionTable = field(default_factory=default_confusion_table, compare=False)
    seed: int = 0

    def __post_init__(self):
        check_at_least('count', self.count, 0)


# Define variant_space()
# -------------------------------------------------------------------------
def variant_space(label: str, table: ConfusionTable) -> List[str]:
    """
    Every single-substitution look-alike of `label`, position-major.
    There are exactly 5 * len(label) of them and all are distinct.
    """
    return [label[:i] + r + label[i + 1:] for i, ch in enumerate(label) for r in table[ch]]


# Define generate_resemblants()
# -------------------------------------------------------------------------
def generate_resemblants(label: str, spec: ResemblantSpec) -> List[str]:
    """
    Draw `spec.count` distinct resemblant words of `label` without
    replacement from its variant space.

    Raises:
        InfeasibleCount: count exceeds 5 * len(label).
    """
    capacity = CONFUSION_ROW_SIZE * len(label)
    if spec.count > capacity:
        raise InfeasibleCount(f"{spec.count} resemblants requested for {label!r}, "
                              f"only {capacity} exist")
    if spec.count == 0:
        return []
    variants = variant_space(label, spec.table)
    rng = np.random.default_rng(spec.seed)
    picks = rng.choice(capacity, size=spec.count, replace=False)
    return [variants[i] for i in picks]


# Define resemblant_batch()
# -------------------------------------------------------------------------
def resemblant_batch(labels: Sequence[str],
                     count: int,
                     table: ConfusionTable,
                     batch_seed: int) -> List[str]:
    """
    Resemblants for a whole mini-batch, flattened label by label
    (count per label, N * count in total). Each label gets its own seed
    derived from the batch seed and its position in the batch.
    """
    if count == 0:
        return []
    seeds = np.random.SeedSequence(batch_seed).generate_state(len(labels), dtype=np.uint64)
    out: List[str] = []
    for label, seed in zip(labels, seeds):
        # labels too short for the requested count contribute what exists
        capped = min(count, CONFUSION_ROW_SIZE * len(label))
        out.extend(generate_resemblants(label, ResemblantSpec(capped, table, int(seed))))
    return out
