import logging
import sys
from typing import Optional, Union

import config
from cli import main as cli_main


def setup_logger(name: Optional[str] = None, level: Union[int, str] = logging.INFO) -> logging.Logger:
    """Setup a simple console logger (the root logger when name is None)"""
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Create console handler if not already added
    if not logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s | %(levelname)s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def main(argv=None) -> int:
    setup_logger(level=config.SADDLE_LOG_LEVEL)
    return cli_main(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
