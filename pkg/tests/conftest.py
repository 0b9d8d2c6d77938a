import numpy as np
import pytest

from wmlab.corpus import generate_desk_corpus


@pytest.fixture(scope="session")
def desk_images():
    """Six 64x64 desk images shared by the module tests."""
    return generate_desk_corpus(count=6, size=64, seed=42)


@pytest.fixture(scope="session")
def desk_image(desk_images):
    return desk_images[0]


@pytest.fixture(scope="session")
def desk_gray():
    """A grayscale desk image (single channel)."""
    from wmlab.image import ImageU8, luma601, quantize_u8

    img = generate_desk_corpus(count=1, size=64, seed=7)[0]
    return ImageU8(quantize_u8(luma601(img.data))[:, :, None])
