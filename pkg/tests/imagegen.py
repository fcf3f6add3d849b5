import numpy as np


def random_image(rng, rows, cols):
    return rng.integers(0, 256, (rows, cols), dtype=np.uint8)
