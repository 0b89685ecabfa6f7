from fractions import Fraction

import pytest

from swclock.clock_model import build_config
from swclock.config import get_settings


@pytest.fixture
def clean_settings(monkeypatch):
    # Settings are cached per process; each test sees a fresh environment
    for name in ("SWCLOCK_OUT", "SWCLOCK_LOG_LEVEL", "SWCLOCK_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def make_cfg():
    def _make(n, m=1, phi=Fraction(1, 2), T=1.0, **kwargs):
        return build_config(n=n, m=m, T=T, phi=phi, warn=False, **kwargs)

    return _make
