import subprocess
import sys

import pytest

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

ADAPTERS = {
    "landmarks": [sys.executable, "-m", "morphline_adapters.landmarks"],
    "forgery": [sys.executable, "-m", "morphline_adapters.forgery"],
    "embedding": [sys.executable, "-m", "morphline_adapters.embedding"],
}


def run_adapter(kind, *args):
    return subprocess.run(
        ADAPTERS[kind] + [str(a) for a in args],
        capture_output=True,
        text=True,
        timeout=60,
    )


def morphline_cli(*args):
    return subprocess.run(
        ["morphline"] + [str(a) for a in args],
        capture_output=True,
        text=True,
        timeout=600,
    )


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("adapters") / "corpus"
    proc = morphline_cli("synth-corpus", "--out", out, "--n", 6, "--seed", 31, "--size", 128)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def sample_image(corpus_dir):
    return sorted(corpus_dir.glob("*.png"))[0]


@pytest.fixture(scope="session")
def blank_image(tmp_path_factory):
    import numpy as np
    from PIL import Image

    path = tmp_path_factory.mktemp("blank") / "blank.png"
    Image.fromarray(np.full((128, 128, 3), 40, dtype=np.uint8)).save(path)
    return path
