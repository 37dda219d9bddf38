import numpy as np
import pytest

from morphline.fusion import Pool
from morphline.synth import make_assets

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

CORPUS_SIZE = 128
DRUG_SEED = 101
HEALTHY_SEED = 202

# anonymity threshold calibrated for the stub embedding on this corpus:
# cross-identity distances sit near 0.04-0.09, near-parent merges below 0.018
STUB_ANONYMITY_THRESHOLD = 0.012


@pytest.fixture(scope="session")
def drug_assets():
    return make_assets(DRUG_SEED, 8, CORPUS_SIZE, Pool.DRUG_ORIGINAL, "drug")


@pytest.fixture(scope="session")
def healthy_assets():
    return make_assets(HEALTHY_SEED, 8, CORPUS_SIZE, Pool.HEALTHY_GAN, "healthy")


@pytest.fixture(scope="session")
def drug_dir(tmp_path_factory):
    from morphline.synth import write_corpus

    path = tmp_path_factory.mktemp("corpus") / "drug"
    write_corpus(path, 8, DRUG_SEED, CORPUS_SIZE)
    return path


@pytest.fixture(scope="session")
def healthy_dir(tmp_path_factory):
    from morphline.synth import write_corpus

    path = tmp_path_factory.mktemp("corpus") / "healthy"
    write_corpus(path, 8, HEALTHY_SEED, CORPUS_SIZE)
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
