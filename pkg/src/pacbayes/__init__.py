"""PAC-Bayes risk certificates for bounded and general-tail losses.

The top-level namespace re-exports the certificate types and the bound
evaluators most callers need; the experiment harness lives in
:mod:`pacbayes.lab`.
"""

from pacbayes.context import BoundContext, Certificate, EssSupInfo
from pacbayes.bounded import (
    catoni_fixed,
    catoni_uniform,
    fast_rate_simple,
    fast_rate_strong,
    mcallester,
    mixed_rate,
    rivasplata,
    seeger_langford,
    thiemann,
)

__version__ = "0.1.0"

__all__ = [
    "BoundContext",
    "Certificate",
    "EssSupInfo",
    "catoni_fixed",
    "catoni_uniform",
    "fast_rate_simple",
    "fast_rate_strong",
    "mcallester",
    "mixed_rate",
    "rivasplata",
    "seeger_langford",
    "thiemann",
]
