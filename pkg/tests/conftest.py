import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pott.signing import RelayKeypair  # noqa: E402

GOLDEN_HEX = (
    "a7"
    "00582083a012ac612c83f68917738735346 5fb961356e81bcd8ada4ba0d657da1c2685"
    "01502219c646c0c353d187efb2cab9ef615b"
    "025820d4063aea170381cecaf4d43b1e8dd32ec1349fac78edc075ce08fb364d604043"
    "031b0000000065b9b8a0"
    "041b0000000065b9bd40"
    "0558202c770e008083e62afd137698ce196db65cb406eb2b4c506cb6fa0c546f95d855"
    "065840dbd5953045c5b131a25ecabd6f2d786b287ee1da3ae2845b2789b51ccdc382ef"
    "8368e03650879c71755b7fda466b44a73218f6820625e9592fccb3a6133b92b2"
).replace(" ", "")


@pytest.fixture
def golden_bytes() -> bytes:
    return bytes.fromhex(GOLDEN_HEX)


def make_keys(n: int, offset: int = 1) -> list[RelayKeypair]:
    return [RelayKeypair.from_secret((offset + i).to_bytes(32, "big")) for i in range(n)]
