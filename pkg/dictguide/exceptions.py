# Python source
# -------------------------------------------------------------------------
# Copyright (c) 2026 dictguide contributors. All rights reserved.
# Licensed under the MIT License. See license.txt in the project root for
# license information.
# -------------------------------------------------------------------------

# FILE:           exceptions.py

# DESCRIPTION:    Error classes raised across the package. Every class
#                 carries the exit code and category the command line
#                 reports when it is not caught earlier.

# CONTRIBUTORS:   dictguide maintainers
# CREATED:        17 Oct 2026
# VERSION:        0.1.0


class DictGuideError(Exception):
    """Base class for every error the package raises on purpose."""
    exit_code = 1
    category = "error"


class InvalidConfig(DictGuideError):
    exit_code = 2
    category = "config"


class NormalizationError(DictGuideError):
    exit_code = 3
    category = "normalization"


class InvalidCharacter(NormalizationError):
    pass


class EmptyWord(NormalizationError):
    pass


class TooLong(NormalizationError):
    pass


class EmptyLexicon(DictGuideError):
    exit_code = 4
    category = "lexicon"


class InfeasibleCount(DictGuideError):
    exit_code = 5
    category = "resemblant"


class DatasetGenerationError(DictGuideError):
    exit_code = 6
    category = "dataset"


class NonFiniteParams(DictGuideError):
    exit_code = 7
    category = "numeric"


class NonFiniteLoss(DictGuideError):
    exit_code = 7
    category = "numeric"


class DegenerateEmbedding(DictGuideError):
    exit_code = 8
    category = "embedding"


class VersionMismatch(DictGuideError):
    exit_code = 9
    category = "format"


class CorruptFile(DictGuideError):
    exit_code = 10
    category = "format"


class IoError(DictGuideError):
    exit_code = 11
    category = "io"


class EmptyTestSet(DictGuideError):
    exit_code = 12
    category = "evaluation"
