import json
import logging
import time

# Whitelisted LogRecord extras copied into each JSON line.
EXTRA_KEYS = (
    "command",
    "elapsed_ms",
    "protocol_id",
    "candidates",
    "frames",
    "condition",
    "bad_electrodes",
    "path",
)


def elapsed_ms(started: float) -> float:
    """Milliseconds since a ``time.perf_counter()`` reading, rounded for log lines."""
    return round((time.perf_counter() - started) * 1000, 2)


class JSONFormatter(logging.Formatter):
    """One JSON object per record, numpy scalars and paths rendered with ``str``."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
        }
        for key in EXTRA_KEYS:
            if hasattr(record, key):
                log_data[key] = getattr(record, key)
        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_data, ensure_ascii=False, default=str)


def configure_logging(level: int | str = logging.WARNING) -> None:
    """Route the root logger to stderr through ``JSONFormatter``."""
    logger = logging.getLogger()
    handler = logging.StreamHandler()
    handler.setFormatter(JSONFormatter())
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level.upper() if isinstance(level, str) else level)
