import pytest

from tokenomics import econ_core as ec

from helpers import CONFIG_DIR


@pytest.fixture(scope="session")
def det_cfg() -> ec.EconomyConfig:
    return ec.load_config(CONFIG_DIR / "deterministic.json")


@pytest.fixture(scope="session")
def iid_cfg() -> ec.EconomyConfig:
    return ec.load_config(CONFIG_DIR / "iid.json")


@pytest.fixture(scope="session")
def common_cfg() -> ec.EconomyConfig:
    return ec.load_config(CONFIG_DIR / "common.json")


@pytest.fixture(scope="session")
def het_cfg() -> ec.EconomyConfig:
    return ec.load_config(CONFIG_DIR / "heterogeneous.json")
