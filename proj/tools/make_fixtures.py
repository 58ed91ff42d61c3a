#!/usr/bin/env python3
"""Regenerate tests/data/{train,eval} from the sample photos bundled with
scikit-image, scikit-learn and matplotlib."""

import argparse
import pathlib

import matplotlib.cbook
import numpy as np
import skimage.data
from PIL import Image
from sklearn.datasets import load_sample_image

TRAIN_SOURCES = {
    "astronaut": lambda: skimage.data.astronaut(),
    "coffee": lambda: skimage.data.coffee(),
    "rocket": lambda: skimage.data.rocket(),
    "china": lambda: load_sample_image("china.jpg"),
}

# Drawn after the eval crops so earlier fixtures keep their pixels.
EXTRA_TRAIN_SOURCES = {
    "motorcycle": lambda: skimage.data.stereo_motorcycle()[0],
    "retina": lambda: skimage.data.retina(),
    "ihc": lambda: skimage.data.immunohistochemistry(),
    "hubble": lambda: skimage.data.hubble_deep_field(),
}

EVAL_SOURCES = {
    "chelsea": lambda: skimage.data.chelsea(),
    "flower": lambda: load_sample_image("flower.jpg"),
    "hopper": lambda: np.asarray(Image.open(matplotlib.cbook.get_sample_data("grace_hopper.jpg"))),
}


def crops(image, count, size, rng):
    h, w = image.shape[:2]
    for _ in range(count):
        y = int(rng.integers(0, h - size + 1))
        x = int(rng.integers(0, w - size + 1))
        yield image[y:y + size, x:x + size, :3]


def write(sources, out, per_image, size, rng, clear=True):
    out.mkdir(parents=True, exist_ok=True)
    if clear:
        for old in out.glob("*.png"):
            old.unlink()
    for name, load in sources.items():
        for i, crop in enumerate(crops(load(), per_image, size, rng)):
            Image.fromarray(np.ascontiguousarray(crop)).save(out / f"{name}_{i:02d}.png", optimize=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "tests" / "data")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    write(TRAIN_SOURCES, args.out / "train", per_image=6, size=128, rng=rng)
    write(EVAL_SOURCES, args.out / "eval", per_image=2, size=128, rng=rng)
    write(EXTRA_TRAIN_SOURCES, args.out / "train", per_image=4, size=128, rng=rng, clear=False)


if __name__ == "__main__":
    main()
