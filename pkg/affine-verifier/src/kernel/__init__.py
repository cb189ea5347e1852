"""
Numeric kernel: jets, signature-aware linear algebra and differential operators.

Index conventions: lower indices are chart coordinates, vectors are columns,
covectors are rows. Jet arrays are `value[a]`, `J[a, i]`, `H[a, i, j]`.
"""
from src.kernel.charts import ChartMap, Jet, fd_derivative, fd_second_derivative
from src.kernel.linalg import (
    BilinearForm,
    indefinite_gram_schmidt,
    inv_sqrt_spd,
    signature_of,
    solve,
)
from src.kernel.calculus import (
    MetricField,
    christoffel,
    integrate_1form,
    lie_bracket,
    riemann_tensor,
)
from src.kernel.grids import GridSpec

__all__ = [
    "BilinearForm",
    "ChartMap",
    "GridSpec",
    "Jet",
    "MetricField",
    "christoffel",
    "fd_derivative",
    "fd_second_derivative",
    "indefinite_gram_schmidt",
    "integrate_1form",
    "inv_sqrt_spd",
    "lie_bracket",
    "riemann_tensor",
    "signature_of",
    "solve",
]
