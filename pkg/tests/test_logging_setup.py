import io
import logging

import pytest

from modules.logging_setup import TqdmHandler, configure_logging, verbosity_level


@pytest.fixture
def root_logger():
    root = logging.getLogger()
    level = root.level
    yield root
    for handler in list(root.handlers):
        if isinstance(handler, TqdmHandler):
            root.removeHandler(handler)
    root.setLevel(level)


@pytest.mark.parametrize("verbose, quiet, level", [
    (0, False, logging.INFO),
    (2, False, logging.DEBUG),
    (1, True, logging.WARNING),
])
def test_verbosity_level(verbose, quiet, level):
    assert verbosity_level(verbose, quiet) == level


def test_single_handler_writes_formatted_lines(root_logger):
    configure_logging()
    stream = io.StringIO()
    configure_logging(quiet=True, stream=stream)
    assert sum(isinstance(h, TqdmHandler) for h in root_logger.handlers) == 1
    logging.getLogger("modules.pipeline").info("hidden")
    logging.getLogger("modules.pipeline").warning("shown")
    lines = stream.getvalue().splitlines()
    assert len(lines) == 1
    assert "WARNING" in lines[0] and "modules.pipeline" in lines[0] and lines[0].endswith("shown")


def test_urllib3_stays_quiet_in_debug(root_logger):
    configure_logging(verbose=1)
    assert logging.getLogger("urllib3").level == logging.INFO
