from __future__ import annotations

import random
import subprocess
import sys

from hypothesis import given
from hypothesis import strategies as st

from usrep.kernels import backend_name, lcs_length, lcs_length_ids_pure


def test_backend_name_is_known():
    assert backend_name() in ("compiled", "pure-python")


def test_lcs_fixture():
    assert lcs_length(list("abcd"), list("acbd")) == 3
    assert lcs_length([], [1, 2]) == 0
    assert lcs_length(["x"], ["y"]) == 0


def test_lcs_accepts_arbitrary_hashables():
    assert lcs_length(["甲", "状", "腺"], ["甲", "腺"]) == 2
    assert lcs_length([("a", 1), ("b", 2)], [("a", 1)]) == 1


@given(
    st.lists(st.integers(0, 5), max_size=20),
    st.lists(st.integers(0, 5), max_size=20),
)
def test_dispatch_agrees_with_pure(a, b):
    assert lcs_length(a, b) == lcs_length_ids_pure(a, b)


def test_pure_python_env_forces_fallback():
    code = (
        "from usrep.kernels import backend_name, lcs_length\n"
        "assert backend_name() == 'pure-python'\n"
        "assert lcs_length(list('abcd'), list('acbd')) == 3\n"
        "print('ok')\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "USREP_PURE_PYTHON": "1"},
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"


def test_backends_agree_on_random_inputs():
    try:
        from usrep import _speedups
    except ImportError:
        return  # fallback-only build: dispatch test above already covers it
    import numpy as np

    rng = random.Random(13)
    for _ in range(200):
        a = [rng.randrange(8) for _ in range(rng.randrange(0, 30))]
        b = [rng.randrange(8) for _ in range(rng.randrange(0, 30))]
        compiled = _speedups.lcs_length_ids(
            np.asarray(a, dtype=np.intc), np.asarray(b, dtype=np.intc)
        )
        assert compiled == lcs_length_ids_pure(a, b)
