"""Kernel selection: the compiled extension when it imports, else numpy."""

from memloss import _kernel_py as python

try:
    from memloss import _kernel as compiled
except ImportError:  # extension not built
    compiled = None

BACKENDS = {"python": python}
if compiled is not None:
    BACKENDS["compiled"] = compiled

default = compiled if compiled is not None else python


def get(name: str | None = None):
    if name is None:
        return default
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None
