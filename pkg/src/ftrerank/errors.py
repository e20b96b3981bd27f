"""Exception hierarchy shared by all modules.

Three branches map onto CLI exit codes: ConfigError (2), DataError (3)
and EndpointError (4).
"""

from __future__ import annotations


class FtrerankError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(FtrerankError):
    """Bad or missing configuration."""


class DataError(FtrerankError):
    """Malformed or inconsistent input data."""


class EndpointError(FtrerankError):
    """The generation endpoint could not produce a usable reply."""


# -- corpus ------------------------------------------------------------------

class MalformedRecord(DataError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownLabel(DataError):
    def __init__(self, label: str, where: str = ""):
        suffix = f" ({where})" if where else ""
        super().__init__(f"unknown label {label!r}{suffix}")
        self.label = label


class SpanOutOfBounds(DataError):
    def __init__(self, sentence_id: str, start: int, end: int, n_tokens: int):
        super().__init__(
            f"sentence {sentence_id!r}: span [{start}, {end}) outside {n_tokens} tokens"
        )
        self.sentence_id = sentence_id
        self.start = start
        self.end = end


class InsufficientSupport(DataError):
    """A label does not occur often enough in the pool to reach the shot count."""

    def __init__(self, label: str, count: int):
        super().__init__(f"label {label!r} has only {count} occurrences in the pool")
        self.label = label
        self.count = count


class InsufficientNegatives(DataError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"need {needed} annotation-free sentences, pool has {available}")
        self.needed = needed
        self.available = available


class TargetTooSmall(DataError):
    def __init__(self, needed: int, target: int):
        super().__init__(f"covering every label needs {needed} sentences, target is {target}")
        self.needed = needed
        self.target = target


# -- metrics -----------------------------------------------------------------

class UnknownSentence(DataError):
    def __init__(self, sentence_id: str):
        super().__init__(f"prediction references unknown sentence {sentence_id!r}")
        self.sentence_id = sentence_id


class WrongTask(DataError):
    pass


class BadEdges(DataError):
    pass


# -- filtering ---------------------------------------------------------------

class BadDistribution(DataError):
    def __init__(self, sample_id: str, reason: str):
        super().__init__(f"sample {sample_id!r}: {reason}")
        self.sample_id = sample_id
        self.reason = reason


class DuplicateSample(DataError):
    def __init__(self, sample_id: str):
        super().__init__(f"duplicate sample_id {sample_id!r}")
        self.sample_id = sample_id


class SampleMismatch(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class MissingSample(DataError):
    def __init__(self, sample_id: str):
        super().__init__(f"no scores for sample {sample_id!r}")
        self.sample_id = sample_id


class EmptyValidation(DataError):
    pass


# -- prompting ---------------------------------------------------------------

class MissingTemplate(DataError):
    def __init__(self, label: str):
        super().__init__(f"no choice template for label {label!r}")
        self.label = label


class MarkerCollision(DataError):
    pass


class BadVariant(ConfigError):
    def __init__(self, variant_id: str):
        super().__init__(f"unknown instruction variant {variant_id!r}")
        self.variant_id = variant_id


# -- retrieval ---------------------------------------------------------------

class PoolTooSmall(DataError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"asked for {needed} items from a pool of {available}")
        self.needed = needed
        self.available = available


class MissingEmbedding(DataError):
    def __init__(self, sentence_id: str):
        super().__init__(f"no embedding for sentence {sentence_id!r}")
        self.sentence_id = sentence_id


# -- llm client --------------------------------------------------------------

class EndpointUnreachable(EndpointError):
    pass


class ContextTooLong(EndpointError):
    pass


class AuthFailure(EndpointError):
    pass
