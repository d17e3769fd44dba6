"""
Logging Setup
Root logger configuration for the command line and the dashboard
"""

import logging

from tqdm import tqdm

from config import LOG_DATE_FORMAT, LOG_FORMAT


class TqdmHandler(logging.StreamHandler):
    """Writes through tqdm so log lines do not break progress bars"""

    def emit(self, record):
        try:
            tqdm.write(self.format(record), file=self.stream)
            self.flush()
        except Exception:
            self.handleError(record)


def verbosity_level(verbose=0, quiet=False):
    if quiet:
        return logging.WARNING
    return logging.DEBUG if verbose else logging.INFO


def configure_logging(verbose=0, quiet=False, stream=None):
    """Install one tqdm-aware handler on the root logger; returns the level"""
    level = verbosity_level(verbose, quiet)
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, TqdmHandler):
            root.removeHandler(handler)
    handler = TqdmHandler(stream)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATE_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
    # urllib3 logs every retry at DEBUG
    logging.getLogger("urllib3").setLevel(max(level, logging.INFO))
    return level
