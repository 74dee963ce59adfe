import logging
from typing import Any

from pythonjsonlogger import jsonlogger

from datashare.config import config

SIM_FIELDS = ("protocol", "tick", "phase", "party")
"""Simulation position a log call may pass through `extra`."""

QUIET_LOGGERS = ("numba",)


def sim_context(record: logging.LogRecord) -> dict[str, Any]:
    return {name: getattr(record, name) for name in SIM_FIELDS if hasattr(record, name)}


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    service_name: str = "datashare"

    def add_fields(self, log_record, record, message_dict):
        super().add_fields(log_record, record, message_dict)
        log_record["service"] = self.service_name
        log_record["severity"] = record.levelname
        log_record["timestamp"] = self.formatTime(record)
        context = sim_context(record)
        for name in context:
            log_record.pop(name, None)
        if context:
            log_record["sim"] = context


class ConsoleFormatter(logging.Formatter):
    """Readable lines with the simulation position appended when there is one."""

    def format(self, record):
        line = super().format(record)
        context = sim_context(record)
        if context:
            line += " [" + " ".join(f"{name}={value}" for name, value in context.items()) + "]"
        return line


def configure_logger():
    """Configure the root logger; JSON lines unless debug mode is on."""
    logger = logging.getLogger()
    if config.debug_mode:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO)

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    # stderr: stdout carries the command's JSON result
    handler = logging.StreamHandler()

    if config.debug_mode:
        formatter = ConsoleFormatter(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    else:
        formatter = CustomJsonFormatter(
            "%(timestamp)s %(service)s %(severity)s %(name)s %(message)s"
        )

    handler.setFormatter(formatter)
    logger.addHandler(handler)

    # galois compiles through numba, which is chatty at DEBUG
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    return logger
