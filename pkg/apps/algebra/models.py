from dataclasses import asdict, dataclass
from typing import Dict


@dataclass(frozen=True)
class ErrorCoefficientSet:
    """The eight BCH error coefficients of a symmetric scheme, through fifth-order commutators."""
    e_t: float
    e_v: float
    e_ttv: float
    e_vtv: float
    e_ttttv: float
    e_vtttv: float
    e_ttvtv: float
    e_vtvtv: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class FamilyPoint:
    """
    Parameters of the seven-stage frame
    D(t0) K(v1, alpha/2 u0) D(t1) K(v2, (1-alpha) u0) D(t1) K(v1, alpha/2 u0) D(t0).
    """
    t0: float
    t1: float
    v1: float
    v2: float
    u0: float
    alpha: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)
