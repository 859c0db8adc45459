import dataclasses
from dataclasses import dataclass

from django.conf import settings


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every operation."""

    singularity: float = 1e-10
    residual: float = 1e-8
    rank: float = 1e-9
    root: float = 1e-9
    real_axis: float = 1e-8
    tail: float = 1e-10
    grid: int = 256
    grid_cap: int = 65536
    max_condition: float = 1e12

    def replace(self, **changes) -> 'Tolerances':
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def get_tolerances(**overrides) -> Tolerances:
    """
    Build the tolerance record from ``WHX_TOLERANCES``/``WHX_GRID_CAP``.
    Falls back to the defaults when Django settings are not configured.
    """
    values = {}
    if settings.configured:
        values.update(getattr(settings, 'WHX_TOLERANCES', {}))
        grid_cap = getattr(settings, 'WHX_GRID_CAP', None)
        if grid_cap is not None:
            values['grid_cap'] = grid_cap
    known = {f.name for f in dataclasses.fields(Tolerances)}
    values = {k: v for k, v in values.items() if k in known}
    return Tolerances(**values).replace(**overrides)


def resolve(tol: 'Tolerances | None') -> Tolerances:
    return tol if tol is not None else get_tolerances()
