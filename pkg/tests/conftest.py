from __future__ import annotations

import numpy as np
import pytest

from dirand.protocols.verdict import Verdict

# Protocol runs checked by the ledger guard in this session.
LEDGER_CHECKS = {"verdicts": 0}


@pytest.fixture(autouse=True, scope="session")
def ledger_guard():
    """Check the seed-ledger identity on every verdict built during the run."""
    original = Verdict.__init__

    def checked(self, *args, **kwargs):
        original(self, *args, **kwargs)
        assert self.seed, f"{self.protocol} verdict has no seed summary"
        assert self.seed_balanced, f"{self.protocol} ledger is off: {self.seed}"
        LEDGER_CHECKS["verdicts"] += 1

    Verdict.__init__ = checked
    yield LEDGER_CHECKS
    Verdict.__init__ = original


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def assert_ledger(verdict) -> None:
    """Seed-ledger identity: bits drawn equal the sum of per-category charges."""
    seed = verdict.seed
    assert seed["drawn"] == sum(seed["by_category"].values())
    assert verdict.seed_balanced
