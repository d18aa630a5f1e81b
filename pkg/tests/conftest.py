import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

import corpora  # noqa: E402
from dctpipe.bench.corpus import make_synthetic_corpus  # noqa: E402

settings.register_profile("dctpipe", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dctpipe")


@pytest.fixture(scope="session")
def oracle_corpus():
    return corpora.oracle_corpus()


@pytest.fixture(scope="session")
def prepared_corpus(tmp_path_factory):
    from dctpipe.bench import prepare_corpus

    raw = tmp_path_factory.mktemp("raw")
    prep = tmp_path_factory.mktemp("prep")
    make_synthetic_corpus(raw, count=64, seed=0)
    prepare_corpus(raw, prep)
    return prep
