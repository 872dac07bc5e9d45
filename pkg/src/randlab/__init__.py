"""randlab: swap the randomness under an ML experiment and measure what changes.

The package has three layers:

* entropy sources (:mod:`randlab.entropy`, :mod:`randlab.qsim`): a pseudo
  source built on SplitMix64, a simulated single-qubit quantum source, and
  a replay source that plays back a recorded bit stream;
* consumers (:mod:`randlab.neural`, :mod:`randlab.trees`,
  :mod:`randlab.datasets`): models and data utilities that draw every
  random decision from an entropy source;
* measurement (:mod:`randlab.randtest`, :mod:`randlab.bench`,
  :mod:`randlab.figures`): a small battery of randomness tests, a benchmark
  harness that repeats experiments across sources and seeds, and plotting
  helpers for the report path.
"""

from randlab.errors import (
    FormatError,
    GatePrecondition,
    NotNormalized,
    RandlabError,
    ReplayExhausted,
)

__all__ = [
    "FormatError",
    "GatePrecondition",
    "NotNormalized",
    "RandlabError",
    "ReplayExhausted",
]

__version__ = "0.1.0"
