"""Python access to the relighting feature pipeline."""

import json as _json

from . import _core
from ._core import (
    RelightError,
    Scene,
    channel_names,
    inverse_tonemap,
    layout_hash,
    read_tensor,
    set_threads,
    solve_nnls,
    tonemap,
    write_tensor,
)

__version__ = _core.__version__


def _report(fn):
    def wrapper(*args, **kwargs):
        return _json.loads(fn(*args, **kwargs))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


preprocess = _report(_core.preprocess)
solve_lights = _report(_core.solve_lights)
add_light = _report(_core.add_light)
render_features = _report(_core.render_features)
oracle_gen = _report(_core.oracle_gen)
flow = _report(_core.flow)

__all__ = [
    "RelightError",
    "Scene",
    "add_light",
    "channel_names",
    "flow",
    "inverse_tonemap",
    "layout_hash",
    "oracle_gen",
    "preprocess",
    "read_tensor",
    "render_features",
    "set_threads",
    "solve_lights",
    "solve_nnls",
    "tonemap",
    "write_tensor",
]
