import numpy as np
import pytest


def synthetic_scene(size: int = 64, seed: int = 7) -> np.ndarray:
    """Piecewise-smooth clean image with edges, gradients and texture.

    Values span [0, 255] like the 8-bit benchmark images.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    img = 90.0 + 70.0 * np.sin(x / 6.0) * np.cos(y / 9.0)
    img += 60.0 * ((x - size / 2) ** 2 + (y - size / 2) ** 2 < (size / 3) ** 2)
    img += 25.0 * (x > 0.7 * size)
    img += rng.normal(0.0, 4.0, img.shape).cumsum(axis=1) * 0.02
    img -= img.min()
    img *= 255.0 / img.max()
    return img


@pytest.fixture
def scene64():
    return synthetic_scene(64)


@pytest.fixture
def scene32():
    return synthetic_scene(32, seed=3)
