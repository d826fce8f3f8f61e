"""The graded perturbation catalog: 33 validated kinds, 5 intensity levels."""

from .catalog import (
    Catalog,
    PerturbationSpec,
    EXCLUDED_KINDS,
    load_catalog,
    default_catalog,
    apply,
)

__all__ = [
    "Catalog",
    "PerturbationSpec",
    "EXCLUDED_KINDS",
    "load_catalog",
    "default_catalog",
    "apply",
]
