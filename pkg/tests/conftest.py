import random

import pytest

from drmx import data_path, drm, pipeline
from drmx.kbio import RunConfig, parse_relevance
from drmx.vectorizer import vectorize

TRAINS = data_path("trains")


def trains_paths():
    return TRAINS / "trains.pl", TRAINS / "trains.modes", TRAINS / "trains.examples"


@pytest.fixture(scope="session")
def trains_kb():
    return pipeline.load_kb(*trains_paths())


@pytest.fixture(scope="session")
def trains_relmap():
    return parse_relevance((TRAINS / "trains.relevance").read_text(), "inherit")


@pytest.fixture(scope="session")
def trains_features(trains_kb):
    cfg = RunConfig(max_draws=500, seed=7)
    fs, sampler = pipeline.sample_features(trains_kb, trains_kb.dataset.examples(), cfg)
    return fs, sampler


@pytest.fixture(scope="session")
def trains_vectors(trains_kb, trains_features):
    return vectorize(trains_kb, trains_features[0])


@pytest.fixture(scope="session")
def trains_network(trains_vectors):
    cfg = RunConfig()
    net, report = drm.train(trains_vectors, cfg)
    return net, report, drm.NetworkPredictor(net, trains_vectors.class_set)


@pytest.fixture
def rng():
    return random.Random(1234)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
