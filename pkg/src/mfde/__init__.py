"""Numerical toolkit for exponential dichotomies of mixed-type functional
differential equations with infinite-range shifts and convolution terms.

Submodules are imported on first attribute access so that the command line
entry point can configure threading before any BLAS-backed import runs.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "grids", "system", "spectral", "hale", "kernels",
    "dichotomy", "degeneracy", "nagumo", "reports", "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
