import os

import pytest

from reuselab.standins import write_car_like_csv, write_mushroom_like_csv


@pytest.fixture(scope="session")
def car_like_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "car_like.csv"
    write_car_like_csv(path)
    return str(path)


@pytest.fixture(scope="session")
def mushroom_like_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "mushroom_like.csv"
    write_mushroom_like_csv(path)
    return str(path)
