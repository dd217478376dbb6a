# Shared/log.py
from __future__ import annotations

import logging


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="[%(levelname)s] %(name)s: %(message)s",
    )
    # POT is chatty about numItermax at DEBUG
    logging.getLogger("ot").setLevel(logging.WARNING)
