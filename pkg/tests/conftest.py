"""Shared fixtures: synthetic stimulus stores for the listening-test layers.

Both stores are built once per test run from fabricated speech-like signals:
a quality-rating store (5 speakers, one utterance per trial SNR, every system
rendering plus video frames) and a keyword store (8 speakers x 4 SNRs x the
five test conditions, with ground-truth keywords).
"""

import pytest

from lombardse.listen.synthetic import demo_noise, prepare_stimuli
from lombardse.listen.synthetic import demo_keyword_units as make_keyword_units
from lombardse.listen.synthetic import demo_quality_units as make_quality_units

# Verdict lines appended by the acceptance tests; printed after the run so
# every terminal log ends with one PASS/FAIL line per release criterion.
ACCEPTANCE_VERDICTS: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def listen_noise():
    return demo_noise()


@pytest.fixture(scope="session")
def quality_store(tmp_path_factory, listen_noise):
    return prepare_stimuli(make_quality_units(listen_noise),
                           tmp_path_factory.mktemp("quality_store"),
                           noise=listen_noise, kind="mushra")


@pytest.fixture(scope="session")
def keyword_store(tmp_path_factory, listen_noise):
    return prepare_stimuli(make_keyword_units(listen_noise),
                           tmp_path_factory.mktemp("keyword_store"),
                           kind="intelligibility")
