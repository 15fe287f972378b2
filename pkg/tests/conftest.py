# tests/conftest.py
import pytest

from core.algebra import field_make
from core.codec import code_from_parity_check, code_make_hamming, code_make_rs
from core.rng import make_rng


# ---------------------------------------------------------
# Fields
# ---------------------------------------------------------
@pytest.fixture(scope="session")
def gf2():
    return field_make(2)


@pytest.fixture(scope="session")
def gf7():
    return field_make(7)


@pytest.fixture(scope="session")
def gf16():
    return field_make(16)


@pytest.fixture(scope="session")
def gf256():
    return field_make((2, 8))


# ---------------------------------------------------------
# Codes
# ---------------------------------------------------------
@pytest.fixture(scope="session")
def rs63(gf7):
    return code_make_rs(6, 3, gf7)


@pytest.fixture(scope="session")
def rs15_11(gf16):
    return code_make_rs(15, 11, gf16)


@pytest.fixture(scope="session")
def hamming74():
    return code_make_hamming(3)


@pytest.fixture(scope="session")
def parity32(gf2):
    return code_from_parity_check([[1, 1, 1]], gf2, d_min=2)


# ---------------------------------------------------------
# Randomness
# ---------------------------------------------------------
@pytest.fixture
def rng(request):
    return make_rng(1234, request.node.name)
