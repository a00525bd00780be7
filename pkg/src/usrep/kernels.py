"""Hot metric kernels with a compiled core and a pure-Python fallback.

The longest-common-subsequence length behind ROUGE-L is the one quadratic
inner loop in the evaluation suite, so it ships as a Cython extension.  The
backend is chosen once at import time: the compiled module when available,
the pure-Python implementation otherwise.  Setting ``USREP_PURE_PYTHON=1``
forces the fallback (used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os
from typing import Hashable, Sequence

import numpy as np

_speedups = None
if os.environ.get("USREP_PURE_PYTHON") != "1":
    try:
        from usrep import _speedups  # type: ignore[no-redef]
    except ImportError:
        _speedups = None

__all__ = ["backend_name", "lcs_length", "lcs_length_ids_pure"]


def backend_name() -> str:
    return "pure-python" if _speedups is None else "compiled"


def lcs_length_ids_pure(a: Sequence[int], b: Sequence[int]) -> int:
    """Two-row LCS dynamic program; same contract as the compiled kernel."""
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    prev = [0] * (m + 1)
    for ai in a:
        curr = [0] * (m + 1)
        for j in range(m):
            if ai == b[j]:
                curr[j + 1] = prev[j] + 1
            else:
                up, left = prev[j + 1], curr[j]
                curr[j + 1] = up if up >= left else left
        prev = curr
    return prev[m]


def _to_ids(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[list[int], list[int]]:
    ids: dict[Hashable, int] = {}
    out_a = [ids.setdefault(tok, len(ids)) for tok in a]
    out_b = [ids.setdefault(tok, len(ids)) for tok in b]
    return out_a, out_b


def lcs_length(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """LCS length over arbitrary hashable token sequences."""
    ids_a, ids_b = _to_ids(a, b)
    if _speedups is None:
        return lcs_length_ids_pure(ids_a, ids_b)
    return int(
        _speedups.lcs_length_ids(
            np.asarray(ids_a, dtype=np.intc), np.asarray(ids_b, dtype=np.intc)
        )
    )
