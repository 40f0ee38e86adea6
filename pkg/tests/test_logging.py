import logging
from logging import ERROR, INFO, WARNING, LogRecord
from typing import Any

import pytest

from mdidro.cli.log_formatter import ConsoleHandler, ConsoleWarningFormatter
from mdidro.cli.main import setup_logging


formatter = ConsoleWarningFormatter("%(name)s.%(funcName)s: %(message)s")


def test_warning() -> None:
    record = LogRecord("n", WARNING, "p", 1, "warn-message", (), None)
    formatted = formatter.format(record)
    # yellow WARNING
    assert formatted.startswith("\x1b[33mWARNING\x1b[0m")
    # message inside
    assert formatted.find("warn-message") >= 0


def test_error() -> None:
    record = LogRecord("n", ERROR, "p", 1, "error-message", (), None)
    formatted = formatter.format(record)
    # red ERROR
    assert formatted.startswith("\x1b[31mERROR\x1b[0m")
    # message inside
    assert formatted.find("error-message") >= 0


def test_info_has_no_prefix() -> None:
    record = LogRecord("n", INFO, "p", 1, "info-message", (), None)
    assert formatter.format(record) == "n.None: info-message"


@pytest.mark.parametrize(
    "verbosity,level",
    [(-2, logging.CRITICAL), (-1, ERROR), (0, WARNING), (1, INFO), (2, logging.DEBUG)],
)
def test_setup_logging(verbosity: int, level: int) -> None:
    setup_logging(verbosity=verbosity, color=False)
    handlers = [
        handler
        for handler in logging.getLogger().handlers
        if isinstance(handler, ConsoleHandler)
    ]
    assert len(handlers) == 1
    assert handlers[0].level == level


def test_handler_writes_to_stderr(capfd: Any) -> None:
    setup_logging(verbosity=0, color=False)
    logging.getLogger("mdidro.test").warning("disk is %s", "full")
    out, err = capfd.readouterr()
    assert out == ""
    assert "disk is full" in err
