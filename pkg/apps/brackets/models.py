from dataclasses import dataclass, fields
from typing import Dict, Optional, Tuple

from apps.common.exceptions import CapabilityError


@dataclass(frozen=True)
class BracketValues:
    """
    Nested Poisson brackets of T = p^2/2 and V(q) at one phase point.

    tv = {T,V}, ttv = {T{T,V}}, vtv = {V{T,V}}, tt3v = {TTTTV}, vt3v = {VTTTV},
    ttvtv = {T(TV)^2} and vtvtv = {V(TV)^2}. Brackets the force model cannot
    supply are None and named in `unavailable`.
    """
    tv: float
    ttv: float
    vtv: float
    tt3v: Optional[float]
    vt3v: float
    ttvtv: float
    vtvtv: float
    unavailable: Tuple[str, ...] = ()

    def require(self, *names: str) -> None:
        for name in names:
            if name in self.unavailable:
                raise CapabilityError(f"Bracket {name} needs derivatives the force model does not provide",
                                      bracket=name)

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {field.name: getattr(self, field.name) for field in fields(self) if field.name != 'unavailable'}


@dataclass(frozen=True)
class ShadowSample:
    t: float
    energy: float
    shadow_energy: float
    drift: float
