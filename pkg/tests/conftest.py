from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from aoilab.model import validate_instance

settings.register_profile("default", max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GRID = 16


def dyadic(lo: int, hi: int):
    """Multiples of 1/GRID in [lo/GRID, hi/GRID]."""
    return st.integers(lo, hi).map(lambda k: Fraction(k, GRID))


@st.composite
def instances(draw, max_n: int = 6, g_span: int = 48, s_span: int = 32):
    n = draw(st.integers(0, max_n))
    pairs = [(draw(dyadic(0, g_span)), draw(dyadic(1, s_span))) for _ in range(n)]
    last = max((g for g, _ in pairs), default=Fraction(0))
    horizon = last + draw(dyadic(1, 64))
    return validate_instance(pairs, horizon)


rationals = st.fractions(max_denominator=1000).filter(lambda x: abs(x) < 1000)
