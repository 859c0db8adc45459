from django import template

register = template.Library()


@register.filter
def residual(value):
    """
    Format a residual or error norm in scientific notation
    """
    if value is None or isinstance(value, str):
        return "n/a"

    try:
        return f"{float(value):.3e}"
    except (ValueError, TypeError):
        return "n/a"


@register.filter
def index_tuple(indices):
    """
    Render partial indices as (k1, k2, ...)
    """
    if indices is None or isinstance(indices, str):
        return "()"

    try:
        return "(" + ", ".join(str(int(k)) for k in indices) + ")"
    except (ValueError, TypeError):
        return "()"


@register.filter
def stability_label(indices):
    """
    'stable' when the largest and smallest index differ by at most one
    """
    if isinstance(indices, bool):
        return "stable" if indices else "unstable"
    if indices is None or isinstance(indices, str):
        return "unknown"

    try:
        kappas = [int(k) for k in indices]
        if not kappas:
            return "unknown"
        return "stable" if max(kappas) - min(kappas) <= 1 else "unstable"
    except (ValueError, TypeError):
        return "unknown"


@register.filter
def passfail(flag):
    return "passed" if flag else "FAILED"
