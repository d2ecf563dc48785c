import io

import pytest
from loguru import logger

from src.log import configure_logging
from src.seeding import derive_seed, rng_for


def test_derive_seed_is_stable_and_unsigned():
    a = derive_seed(3, "train", 4, 17)
    assert a == derive_seed(3, "train", 4, 17)
    assert 0 <= a < 2**63


def test_derive_seed_separates_streams():
    seeds = {
        derive_seed(0, "train", 1, 2),
        derive_seed(0, "train", 2, 1),
        derive_seed(0, "mc", 1),
        derive_seed(1, "mc", 1),
        derive_seed(0),
    }
    assert len(seeds) == 5


def test_rng_for_matches_derived_seed():
    assert rng_for(5, "rs", 2).integers(1 << 30) == rng_for(5, "rs", 2).integers(1 << 30)


def test_configure_logging_filters_below_level():
    buffer = io.StringIO()
    configure_logging("warning", sink=buffer)
    try:
        logger.info("hidden")
        logger.warning("shown")
    finally:
        configure_logging("INFO")
    text = buffer.getvalue()
    assert "shown" in text and "hidden" not in text


def test_configure_logging_rejects_unknown_level():
    with pytest.raises(ValueError):
        configure_logging("chatty", sink=io.StringIO())
    configure_logging("INFO")
