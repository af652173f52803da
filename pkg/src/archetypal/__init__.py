"""Archetypal analysis: linear Frank-Wolfe estimators and a deep variant
with a fixed latent simplex.

Submodules are loaded lazily so that the command-line entry point can pin
BLAS thread-count environment variables before numpy is imported.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "ArchetypalAnalysis": ".linear",
    "DeepArchetypalAnalysis": ".deep",
    "RandomSource": ".rng",
    "make_archetypal_data": ".synthetic",
    "apply_curvature": ".synthetic",
    "make_side_information": ".synthetic",
    "archetype_recovery_error": ".evaluation",
    "detect_knee": ".evaluation",
    "selection_sweep": ".evaluation",
    "dominant_weights": ".evaluation",
    "simplex_vertices": ".linalg",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module = import_module(_EXPORTS[name], __name__)
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    return getattr(module, name)


def __dir__():
    return __all__
