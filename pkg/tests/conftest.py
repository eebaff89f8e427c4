import pytest

from neurogab import compile, decode_words, make_dataset, make_example8
from neurogab.compiler import Variant
from neurogab.gab import DecoderParams


@pytest.fixture(scope="session")
def H():
    return make_example8()


@pytest.fixture(scope="session")
def dataset(H):
    return make_dataset(H)


@pytest.fixture(scope="session")
def layouts(H):
    return {v: compile(H, DecoderParams(100), v) for v in Variant}


@pytest.fixture(scope="session")
def dataset_runs(layouts, dataset):
    """Full 288-word runs at max_iter 100, shared across test modules."""
    return {v: decode_words(layout, dataset) for v, layout in layouts.items()}
