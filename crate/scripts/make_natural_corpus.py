"""Export the bundled natural photographs used by the baseline tests as NPY.

Sources are the public-domain sample images that ship with scikit-image,
scikit-learn and matplotlib. Each is written as uint8, HxWx3 for colour and
HxW for grayscale. Large images are centre-cropped to at most 512x512.

    python3 scripts/make_natural_corpus.py crates/core/tests/data/natural

With --crops DIR the script also writes 100 deterministic 224x224 crops,
one NPY per image, for use with `sropkit baseline DIR`.
"""
import argparse
import os

import numpy as np
import skimage.data as skd
import skimage.io as skio
from sklearn.datasets import load_sample_images


def sources():
    china, flower = load_sample_images().images
    hopper = skio.imread(os.path.join(
        os.path.dirname(__import__("matplotlib").__file__),
        "mpl-data", "sample_data", "grace_hopper.jpg"))
    return {
        "astronaut": skd.astronaut(),
        "chelsea": skd.chelsea(),
        "coffee": skd.coffee(),
        "rocket": skd.rocket(),
        "hubble": skd.hubble_deep_field(),
        "motorcycle": skd.stereo_motorcycle()[0],
        "china": china,
        "flower": flower,
        "hopper": hopper,
        "camera": skd.camera(),
        "moon": skd.moon(),
        "coins": skd.coins(),
        "grass": skd.grass(),
        "gravel": skd.gravel(),
        "brick": skd.brick(),
    }


def centre_crop(img, limit=512):
    h, w = img.shape[:2]
    y = max(0, (h - limit) // 2)
    x = max(0, (w - limit) // 2)
    return img[y:y + min(h, limit), x:x + min(w, limit)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--crops")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    imgs = {}
    for name, img in sources().items():
        img = np.ascontiguousarray(centre_crop(np.asarray(img)).astype(np.uint8))
        if img.ndim == 3:
            img = np.ascontiguousarray(img[..., :3])
        imgs[name] = img
        np.save(os.path.join(args.out, name + ".npy"), img)
    if args.crops:
        os.makedirs(args.crops, exist_ok=True)
        rng = np.random.default_rng(0)
        names = sorted(imgs)
        for i in range(100):
            img = imgs[names[i % len(names)]]
            h, w = img.shape[:2]
            y = rng.integers(0, h - 224 + 1)
            x = rng.integers(0, w - 224 + 1)
            crop = img[y:y + 224, x:x + 224]
            if crop.ndim == 2:
                crop = np.repeat(crop[..., None], 3, axis=2)
            np.save(os.path.join(args.crops, f"img{i:03d}.npy"), np.ascontiguousarray(crop))


if __name__ == "__main__":
    main()
