"""seqpat: sequence-pattern benchmarks and control loops for completion models."""

__version__ = "0.1.0"

from .codec import (  # noqa: F401
    Alphabet,
    CodecProfile,
    DEFAULT_PROFILE,
    estimate_tokens,
    sample_alphabet,
)
from .models import CompletionRequest, ModelSpec, complete  # noqa: F401
