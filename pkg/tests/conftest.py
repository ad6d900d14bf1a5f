import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    from odpcalc.corpus import load_corpus_problem, load_corpus_sequence

    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_corpus_problem(name)
        return cache[name]

    get.sequence = load_corpus_sequence
    return get
