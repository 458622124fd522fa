"""Named closed-form field families, the registry behind CLI configs.

Every experiment field (drift h, diffusion Gamma, potential H, stream
function psi) is either one of these named rules with parameters, or a raw
sample sequence supplied inline. Keeping the vocabulary closed makes runs
reproducible from their manifest alone.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ValidationError
from .fields import FieldRule

TWO_PI = 2.0 * np.pi


def _constant(value: float) -> FieldRule:
    return FieldRule(
        "constant", {"value": float(value)},
        lambda x, v=float(value): np.full(np.shape(x), v),
    )


def _offset_sin(offset: float = 0.0, amplitude: float = 1.0, harmonic: int = 1) -> FieldRule:
    o, a, k = float(offset), float(amplitude), int(harmonic)
    return FieldRule(
        "offset_sin", {"offset": o, "amplitude": a, "harmonic": k},
        lambda x: o + a * np.sin(TWO_PI * k * np.asarray(x)),
    )


def _offset_cos(offset: float = 0.0, amplitude: float = 1.0, harmonic: int = 1) -> FieldRule:
    o, a, k = float(offset), float(amplitude), int(harmonic)
    return FieldRule(
        "offset_cos", {"offset": o, "amplitude": a, "harmonic": k},
        lambda x: o + a * np.cos(TWO_PI * k * np.asarray(x)),
    )


def _one_minus_cos(harmonic: int = 1) -> FieldRule:
    k = int(harmonic)
    return FieldRule(
        "one_minus_cos", {"harmonic": k},
        lambda x: 1.0 - np.cos(TWO_PI * k * np.asarray(x)),
    )


RULES_1D: dict[str, Callable[..., FieldRule]] = {
    "constant": _constant,
    "offset_sin": _offset_sin,
    "offset_cos": _offset_cos,
    "one_minus_cos": _one_minus_cos,
}


def make_rule(name: str, **params) -> FieldRule:
    """Look up a named 1-D rule and bind its parameters."""
    try:
        factory = RULES_1D[name]
    except KeyError:
        known = ", ".join(sorted(RULES_1D))
        raise ValidationError(f"unknown field rule {name!r}; known rules: {known}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for rule {name!r}: {exc}") from None


# ---------------------------------------------------------------------------
# 2-D rules (stream functions and constant fields on the torus)


class FieldRule2D:
    """Named closed-form rule on [0,1)^2."""

    def __init__(self, name: str, params: dict, evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        self.name = name
        self.params = params
        self.evaluate = evaluate

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _product_sine(amplitude: float = 1.0, kx: int = 1, ky: int = 1) -> FieldRule2D:
    a, mx, my = float(amplitude), int(kx), int(ky)
    return FieldRule2D(
        "product_sine", {"amplitude": a, "kx": mx, "ky": my},
        lambda x, y: a * np.sin(TWO_PI * mx * x) * np.sin(TWO_PI * my * y),
    )


RULES_2D: dict[str, Callable[..., FieldRule2D]] = {
    "product_sine": _product_sine,
}


def make_rule_2d(name: str, **params) -> FieldRule2D:
    try:
        factory = RULES_2D[name]
    except KeyError:
        known = ", ".join(sorted(RULES_2D))
        raise ValidationError(f"unknown 2-D field rule {name!r}; known rules: {known}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for 2-D rule {name!r}: {exc}") from None
