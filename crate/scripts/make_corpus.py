"""Regenerate the external JPEG fixtures in crates/core/tests/data/corpus.

Every file is written by libjpeg through Pillow. Next to each NAME.jpg sit
NAME.json (dimensions, mode, quantization tables in natural order) and
NAME.rgb (libjpeg's own decode, raw interleaved 8-bit samples).
"""
import json
import pathlib

import numpy as np
from PIL import Image
from skimage import data

OUT = pathlib.Path(__file__).resolve().parents[1] / "crates/core/tests/data/corpus"
rng = np.random.default_rng(2024)


def synthetic(w, h):
    y, x = np.mgrid[0:h, 0:w]
    r = (x * 255 // max(w - 1, 1)).astype(np.uint8)
    g = (y * 255 // max(h - 1, 1)).astype(np.uint8)
    b = ((np.sin(x / 5.0) * np.cos(y / 7.0) + 1) * 127).astype(np.uint8)
    img = np.stack([r, g, b], -1)
    img[h // 3 : h // 2, w // 4 : w // 2] = [250, 20, 40]
    noise = rng.integers(-12, 13, img.shape)
    return np.clip(img.astype(int) + noise, 0, 255).astype(np.uint8)


def crop(a, w, h, x0=0, y0=0):
    return np.ascontiguousarray(a[y0 : y0 + h, x0 : x0 + w])


sources = {
    "astronaut": data.astronaut(),
    "coffee": data.coffee(),
    "chelsea": data.chelsea(),
}

# name, pixels, Pillow save options
cases = [
    ("astro_q75_420", crop(sources["astronaut"], 160, 120, 100, 40), dict(quality=75, subsampling=2)),
    ("astro_q95_444", crop(sources["astronaut"], 96, 96, 180, 60), dict(quality=95, subsampling=0)),
    ("astro_q50_422", crop(sources["astronaut"], 120, 88, 40, 300), dict(quality=50, subsampling=1)),
    ("coffee_q85_420", crop(sources["coffee"], 200, 150, 150, 100), dict(quality=85, subsampling=2)),
    ("coffee_q30_420_odd", crop(sources["coffee"], 141, 77, 20, 20), dict(quality=30, subsampling=2)),
    ("coffee_q90_444_opt", crop(sources["coffee"], 104, 72, 300, 200), dict(quality=90, subsampling=0, optimize=True)),
    ("chelsea_q75_420_opt", crop(sources["chelsea"], 180, 130, 50, 50), dict(quality=75, subsampling=2, optimize=True)),
    ("chelsea_q60_422_odd", crop(sources["chelsea"], 99, 61, 200, 100), dict(quality=60, subsampling=1)),
    ("chelsea_q100_444", crop(sources["chelsea"], 64, 64, 120, 120), dict(quality=100, subsampling=0)),
    ("synth_q75_420", synthetic(128, 96), dict(quality=75, subsampling=2)),
    ("synth_q20_420_odd", synthetic(73, 45), dict(quality=20, subsampling=2)),
    ("synth_q95_444_odd", synthetic(33, 17), dict(quality=95, subsampling=0)),
    ("synth_q80_422_opt", synthetic(150, 64), dict(quality=80, subsampling=1, optimize=True)),
    ("synth_q70_420_restart", synthetic(112, 80), dict(quality=70, subsampling=2, restart_marker_blocks=4)),
    ("astro_q88_444_restart", crop(sources["astronaut"], 80, 72, 250, 250), dict(quality=88, subsampling=0, restart_marker_rows=1)),
    ("synth_min_8x8", synthetic(8, 8), dict(quality=75, subsampling=2)),
    ("gray_camera_q75", crop(data.camera(), 160, 120, 200, 100), dict(quality=75)),
    ("gray_camera_q40_odd", crop(data.camera(), 91, 53, 300, 300), dict(quality=40)),
    ("gray_moon_q90_opt", crop(data.moon(), 128, 128, 200, 200), dict(quality=90, optimize=True)),
    ("gray_synth_q60", synthetic(70, 50)[..., 2], dict(quality=60)),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.iterdir():
        old.unlink()
    for name, pixels, opts in cases:
        mode = "L" if pixels.ndim == 2 else "RGB"
        path = OUT / f"{name}.jpg"
        Image.fromarray(pixels, mode).save(path, "JPEG", **opts)
        with Image.open(path) as im:
            tables = {str(k): list(v) for k, v in im.quantization.items()}
            decoded = np.asarray(im.convert("RGB"))
            meta = {
                "width": im.width,
                "height": im.height,
                "components": len(im.getbands()),
                "quantization": tables,
                "progressive": False,
                "encoder": "libjpeg via Pillow",
                "options": {k: v for k, v in opts.items()},
            }
        (OUT / f"{name}.json").write_text(json.dumps(meta, indent=1))
        (OUT / f"{name}.rgb").write_bytes(decoded.tobytes())
    prog = crop(sources["coffee"], 64, 48)
    Image.fromarray(prog).save(OUT.parent / "progressive.jpg", "JPEG", quality=80, progressive=True)


if __name__ == "__main__":
    main()
