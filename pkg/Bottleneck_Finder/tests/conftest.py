"""Shared fixtures: bundled worked examples loaded through app.io."""

from pathlib import Path

import pytest

from app.io import load_document
from app.model import CriterionSpec, EstimateTable
from app.morph import compose
from app.utils import get_resource_path


@pytest.fixture
def resource():
    def _path(name: str) -> Path:
        return get_resource_path(name)
    return _path


@pytest.fixture
def supercharger():
    return load_document(get_resource_path("supercharger.json")).value


@pytest.fixture
def four_component_doc():
    return load_document(get_resource_path("four_component.json"))


@pytest.fixture
def four_component(four_component_doc):
    return four_component_doc.value


@pytest.fixture
def s1(four_component):
    return compose(four_component, ["X1", "Y2", "Z2", "H1"])


@pytest.fixture
def s2(four_component):
    return compose(four_component, ["X2", "Y2", "Z2", "H2"])


@pytest.fixture
def evolution():
    return load_document(get_resource_path("s2_evolution.json")).value


@pytest.fixture
def s2_forecast():
    return load_document(get_resource_path("s2_forecast.json")).value


@pytest.fixture
def small_table():
    criteria = [CriterionSpec("C1", 1.0, 0, 10), CriterionSpec("C2", 1.0, 0, 10)]
    return EstimateTable.build(["a", "b", "c", "d"], criteria,
                               [[9, 1], [1, 9], [5, 5], [4, 4]])
