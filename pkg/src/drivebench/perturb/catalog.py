"""Catalog loading, RNG stream derivation, and the apply() dispatcher.

Determinism contract: a fixed (kind, image, level, seed) quadruple yields a
byte-identical output on every run and platform. Each apply() call derives
its own PCG64 stream from (seed, kind-index, level), so results do not
depend on the order in which a suite applies perturbations.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from .. import image_ops
from ..errors import UnknownPerturbationError, UnsupportedPerturbationError
from . import noise, blur, weather, distortion, affine, pattern, color

# Kinds the literature lists but the catalog deliberately refuses to build:
# affine transforms that destroy driving semantics and generative kinds that
# need pretrained models.
EXCLUDED_KINDS = frozenset(
    {"shear", "rotate", "reflection", "cycle_consistent", "style_transfer"}
)

LEVELS = (1, 2, 3, 4, 5)

_DISPATCH = {
    "gaussian_noise": noise.gaussian_noise,
    "poisson_noise": noise.poisson_noise,
    "impulse_noise": noise.impulse_noise,
    "jpeg_artifact": noise.jpeg_artifact,
    "speckle_noise": noise.speckle_noise,
    "defocus_blur": blur.defocus_blur,
    "motion_blur": blur.motion_blur,
    "zoom_blur": blur.zoom_blur,
    "gaussian_blur": blur.gaussian_blur,
    "lowpass_filter": blur.lowpass_filter,
    "frosted_glass": weather.frosted_glass,
    "snow": weather.snow,
    "fog": weather.fog,
    "brightness": weather.brightness,
    "contrast": weather.contrast,
    "elastic": distortion.elastic,
    "pixelate": distortion.pixelate,
    "sample_pairing": distortion.sample_pairing,
    "sharpen": distortion.sharpen,
    "scale": affine.scale,
    "translate": affine.translate,
    "splatter": pattern.splatter,
    "dotted_lines": pattern.dotted_lines,
    "zigzag": pattern.zigzag,
    "canny_overlay": pattern.canny_overlay,
    "cutout": pattern.cutout,
    "false_color": color.false_color,
    "phase_scramble": color.phase_scramble,
    "hist_eq": color.hist_eq,
    "white_balance": color.white_balance,
    "greyscale": color.greyscale,
    "saturation_increase": color.saturation_increase,
    "saturation_decrease": color.saturation_decrease,
    "posterize": color.posterize,
}


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    code: str
    category: str
    stochastic: bool
    params: dict = field(default_factory=dict)  # name -> list of 5 values
    over_budget: bool = False

    def params_at(self, level: int) -> dict:
        if level not in LEVELS:
            raise ValueError(f"level must be in 1..5, got {level}")
        return {name: values[level - 1] for name, values in self.params.items()}


class Catalog:
    """Ordered collection of PerturbationSpec records."""

    def __init__(self, specs):
        self._specs = {s.kind: s for s in specs}
        self._index = {kind: i for i, kind in enumerate(self._specs)}
        for s in specs:
            if s.kind in EXCLUDED_KINDS:
                raise UnsupportedPerturbationError(
                    f"excluded kind {s.kind!r} cannot be placed in a catalog")
            for name, values in s.params.items():
                if len(values) != 5:
                    raise ValueError(
                        f"{s.kind}.{name}: expected 5 per-level values, got {len(values)}")

    def kinds(self, include_over_budget: bool = True):
        if include_over_budget:
            return list(self._specs)
        return [k for k, s in self._specs.items() if not s.over_budget]

    def __contains__(self, kind):
        return kind in self._specs

    def __len__(self):
        return len(self._specs)

    def get(self, kind: str) -> PerturbationSpec:
        if kind in EXCLUDED_KINDS:
            raise UnsupportedPerturbationError(
                f"perturbation {kind!r} is deliberately excluded from the catalog")
        try:
            return self._specs[kind]
        except KeyError:
            raise UnknownPerturbationError(kind) from None

    def rng_for(self, kind: str, level: int, seed: int) -> np.random.Generator:
        """Per-(seed, kind-index, level) PCG64 stream; order-independent."""
        idx = self._index[self.get(kind).kind]
        ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                    spawn_key=(idx, level))
        return np.random.Generator(np.random.PCG64(ss))

    def apply(self, kind: str, img: np.ndarray, level: int, seed: int = 0) -> np.ndarray:
        """Apply one perturbation to a uint8 RGB image.

        Output has the input's dimensions; quantization to uint8 happens
        exactly once, here.
        """
        spec = self.get(kind)
        params = spec.params_at(level)
        rng = self.rng_for(kind, level, seed)
        imgf = image_ops.to_float(img)
        out = _DISPATCH[kind](imgf, params, rng)
        out8 = image_ops.to_uint8(out)
        if out8.shape != img.shape:
            raise AssertionError(
                f"{kind}: output shape {out8.shape} != input {img.shape}")
        return out8


def load_catalog(path) -> Catalog:
    with open(path, "r", encoding="utf-8") as fh:
        records = yaml.safe_load(fh)
    specs = []
    for rec in records:
        specs.append(PerturbationSpec(
            kind=rec["kind"],
            code=rec["code"],
            category=rec["category"],
            stochastic=bool(rec["stochastic"]),
            params=rec.get("params", {}),
            over_budget=bool(rec.get("over_budget", False)),
        ))
    return Catalog(specs)


_default = None


def default_catalog() -> Catalog:
    global _default
    if _default is None:
        ref = importlib.resources.files("drivebench") / "data" / "catalog.yaml"
        with importlib.resources.as_file(ref) as path:
            _default = load_catalog(path)
    return _default


def apply(kind: str, img: np.ndarray, level: int, seed: int = 0) -> np.ndarray:
    """Module-level convenience over the packaged default catalog."""
    return default_catalog().apply(kind, img, level, seed)
