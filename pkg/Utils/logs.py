# Utils/logs.py
import logging

_FORMAT = "%(asctime)s %(levelname)-7s %(message)s"


def setup_logging(verbose: bool = False) -> None:
    """Configure the root logger once; -v switches to DEBUG."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=_FORMAT,
        datefmt="%H:%M:%S",
        force=True,
    )
