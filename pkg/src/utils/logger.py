#logger.py

import logging
from colorama import Fore, Style, init

import config


# Initialize colorama for cross-platform support
init(autoreset=True)

LOG_COLORS = {
    logging.DEBUG: Fore.LIGHTBLUE_EX,
    logging.INFO: Fore.LIGHTGREEN_EX,
    logging.WARNING: Fore.LIGHTYELLOW_EX,
    logging.ERROR: Fore.LIGHTRED_EX,
    logging.CRITICAL: Fore.MAGENTA + Style.BRIGHT,
}


class SimpleColorFormatter(logging.Formatter):
    """
    A logging formatter that colours the level name.
    """
    def __init__(self, fmt=None, datefmt="%Y-%m-%d %H:%M:%S", style='%'):
        if not fmt:
            fmt = "%(asctime)s - %(levelname)s - %(message)s"
        super().__init__(fmt, datefmt, style)

    def format(self, record):
        """
        Format the record with a colourised level name.

        Args:
            record (logging.LogRecord): The log record containing log details.

        Returns:
            str: The formatted log message.
        """
        log_color = LOG_COLORS.get(record.levelno, "")
        original = record.levelname
        record.levelname = f"{log_color}{original}{Style.RESET_ALL}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def get_logger(name="Symplectic", level=None):
    """
    Create and configure a logger with coloured console output.

    Args:
        name (str): The name of the logger.
        level (int | str | None): Logging level; defaults to `config.LOG_LEVEL`.

    Returns:
        logging.Logger: A logger instance configured with coloured output.
    """
    if level is None:
        level = config.LOG_LEVEL
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid adding multiple handlers to the logger
    if not logger.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        formatter = SimpleColorFormatter(
            fmt="%(asctime)s - %(levelname)s - [%(name)s] %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)
        logger.propagate = False

    return logger
