"""Frequency-domain feature fusion testbed: python surface of the C++ core."""

from ._core import (
    __version__,
    conv2d,
    decompose,
    dft2,
    f1_at_threshold,
    idft2,
    magnitude,
    make_scene,
    model_kinds,
    parameter_count,
    render_structure,
    train_trial,
)

__all__ = [
    "__version__",
    "conv2d",
    "decompose",
    "dft2",
    "f1_at_threshold",
    "idft2",
    "magnitude",
    "make_scene",
    "model_kinds",
    "parameter_count",
    "render_structure",
    "train_trial",
]
