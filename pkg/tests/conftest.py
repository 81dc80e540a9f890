import random

import pytest

from cohomlab.catalog import params_from_raw
from cohomlab.profiles import ClosedFormProfile


@pytest.fixture
def rng():
    return random.Random(20240817)


def hopf_params(family=3):
    """(m, n, p) = (2, 1, 2): the diagonal Hopf surface data."""
    return params_from_raw(2, 2, 1, family)


def random_positive_profile(rng, domain=(0.3, 3.0), family_hint=None):
    """A bounded positive trig/poly closed-form profile pair."""

    def one():
        a0 = rng.uniform(0.5, 2.0)
        a1 = rng.uniform(0.0, 1.5)
        w = rng.uniform(0.3, 2.5)
        ph = rng.uniform(0.0, 6.28)
        b = rng.uniform(0.0, 0.8)
        return f"{a0!r} + {a1!r}*sin({w!r}*r+{ph!r})^2 + {b!r}*r^2/(1+r^2)"

    return ClosedFormProfile(one(), one(), domain, family_hint=family_hint)


def random_periodic_profile(rng, period=6.283185307179586):
    """A positive profile pair with exact period 2*pi (family-3 style)."""

    def one():
        a0 = rng.uniform(0.8, 2.0)
        a1 = rng.uniform(0.05, 0.5)
        a2 = rng.uniform(0.0, 0.3)
        ph = rng.uniform(0.0, 6.28)
        return f"{a0!r} + {a1!r}*sin(r+{ph!r}) + {a2!r}*cos(2*r)"

    return ClosedFormProfile(one(), one(), (0.0, period), family_hint=3)
