"""Peter-Weyl analysis and isotropic Gaussian fields on Z_N, U(1), SO(3) and S^2."""

__version__ = "0.1.0"

from .groups import (  # noqa: E402
    NORTH_POLE,
    Circle,
    CircleGroup,
    Cyclic,
    CyclicGroup,
    DomainMismatchError,
    Rotation,
    RotationGroup,
    Sphere,
    SpherePoint,
    act,
    haar_quadrature,
    inv,
    metric,
    mul,
    sphere_quadrature,
)
from .irreps import character, matrix  # noqa: E402
from .spectral import (  # noqa: E402
    FieldCoefficients,
    PowerSpectrum,
    analyze,
    covariance_from_spectrum,
    evaluate,
    evaluate_on_sphere,
    lift,
    project,
    sample_gaussian,
)
