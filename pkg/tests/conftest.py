import pytest

import stepcheck as sc


@pytest.fixture(scope="session")
def ws_model():
    return sc.load_bundled_model()
