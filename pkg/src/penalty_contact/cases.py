"""Benchmark problems on the unit square with contact on the bottom side."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .elasticity import Material
from .errors import InvalidArgumentError
from .mesh import BoundaryTag, Mesh, SideTag, generate_structured_square

D, N, C = BoundaryTag.DIRICHLET, BoundaryTag.NEUMANN, BoundaryTag.CONTACT


@dataclass(frozen=True)
class ProblemCase:
    name: str
    material: Material
    tagging: Mapping[str, SideTag]
    body_force: Optional[Callable] = None
    traction: Optional[Callable] = None
    traction_breaks: Sequence[float] = ()
    # (x, y, epsilon) -> (ux, uy); None means clamped
    dirichlet: Optional[Callable] = None
    # closed-form penalty solution (x, y, epsilon) -> (ux, uy), when known
    exact: Optional[Callable] = None
    description: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tagging.get("bottom") is not C:
            raise InvalidArgumentError("the bottom side must be tagged Contact")

    def dirichlet_for(self, epsilon: Optional[float]):
        if self.dirichlet is None:
            return None
        eps = 0.0 if epsilon is None else epsilon
        return lambda x, y: self.dirichlet(x, y, eps)

    def exact_for(self, epsilon: Optional[float]):
        if self.exact is None:
            return None
        eps = 0.0 if epsilon is None else epsilon
        return lambda x, y: self.exact(x, y, eps)

    def mesh(self, level: int) -> Mesh:
        """Structured mesh with ``2**level`` cells per side."""
        m = generate_structured_square(2 ** level, self.tagging)
        if len(m.dirichlet_nodes()) == 0:
            raise InvalidArgumentError(f"case {self.name!r} has no Dirichlet nodes at level {level}")
        return m


def patch_case(pressure: float = 1.0) -> ProblemCase:
    """Uniform compression of a Poisson-free block (E = 1).

    With penalty parameter ``eps`` the exact state is ``u = (0, -eps p - p y)``:
    uniform stress ``sigma_yy = -p`` and bottom penetration ``eps p``.
    """
    p = pressure

    def state(x, y, eps):
        return 0.0 * x, -eps * p - p * y

    return ProblemCase(
        name="patch",
        material=Material(mu=0.5, lambda_lame=0.0),
        tagging={"bottom": C, "right": D, "top": N, "left": D},
        traction=lambda x, y: (0.0 * x, -p + 0.0 * y),
        dirichlet=state,
        exact=state,
        description="uniform compression, closed-form penalized state",
        params={"pressure": p},
    )


def flat_punch_case(pressure: float = 1.0, young: float = 1.0, poisson: float = 0.3,
                    lift: float = 0.05) -> ProblemCase:
    """Pressure on the middle third of the top; lateral sides held by grips raised by ``lift``.

    The raised grips open a gap near the bottom corners while the punch drives
    the middle of the bottom side onto the foundation, so the contact zone is
    an interior sub-interval with two free-boundary points.
    """
    p = pressure

    def traction(x, y):
        on = (x > 1.0 / 3.0) & (x < 2.0 / 3.0)
        return 0.0 * x, np.where(on, -p, 0.0)

    return ProblemCase(
        name="flat_punch",
        material=Material.from_engineering(young, poisson),
        tagging={"bottom": C, "right": D, "top": N, "left": D},
        traction=traction,
        traction_breaks=(1.0 / 3.0, 2.0 / 3.0),
        dirichlet=lambda x, y, eps: (0.0 * x, lift + 0.0 * y),
        description=f"flat punch on the middle third, grips raised by {lift:g}",
        params={"pressure": p, "young": young, "poisson": poisson, "lift": lift},
    )


def tension_case(pressure: float = 1.0, young: float = 1.0, poisson: float = 0.3) -> ProblemCase:
    """Upward pull on the top and the body, sides clamped on their upper halves.

    The free lower flanks let the whole bottom side rise, so contact stays open.
    """
    p = pressure

    def side(x, y):
        return D if y > 0.5 else N

    return ProblemCase(
        name="tension",
        material=Material.from_engineering(young, poisson),
        tagging={"bottom": C, "right": side, "top": N, "left": side},
        traction=lambda x, y: (0.0 * x, p + 0.0 * y),
        body_force=lambda x, y: (0.0 * x, p + 0.0 * y),
        description="tension, contact never active",
        params={"pressure": p, "young": young, "poisson": poisson},
    )


CASES = {"patch": patch_case, "flat_punch": flat_punch_case, "tension": tension_case}


def get_case(name: str, **kwargs) -> ProblemCase:
    try:
        factory = CASES[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None
    return factory(**kwargs)
