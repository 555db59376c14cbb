import os

import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def banknote_csv():
    return os.path.join(DATA_DIR, "banknote_1462.csv")


@pytest.fixture
def breast_w_csv():
    return os.path.join(DATA_DIR, "breast_w_15.csv")


@pytest.fixture
def balance_scale_csv():
    return os.path.join(DATA_DIR, "balance_scale_11.csv")
