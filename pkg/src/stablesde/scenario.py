"""Scenario files: one JSON document with nested blocks.

Every block rejects unknown keys.  Builders turn the validated blocks into
library objects (law, kernel grid, drift, simulation config).

Schema
------
law        alpha, center, and either ``atoms`` (list of {weight, direction})
           or ``family`` ("four_atom" | "uniform") with ``weight`` /
           ``n_atoms`` / ``total_mass``
grid       extent, points
drift      family ("zero" | "constant" | "lipschitz" | "radial_singular" |
           "file"), lattice {extent, points}, horizon, dt, p, q, plus the
           family parameters (vector, amplitude, theta, radius, inward,
           b1_vector, path, M)
resolvent  lambdas, eps0, refine_check
series     tol, margin, lambda_factor, max_terms, probes [[s, x1, ..., xd]]
sim        h, T_sim, paths, seed, start_s, start_x, checkpoints, level,
           levels, block_size
target     center, width, decay (the Laplace observable, a bump held on the
           drift support then decaying)
checks     admissibility cases [[d, alpha, p, q]] and generator probes
outputs    directory, formats
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .drift import (
    DriftField,
    constant_drift,
    lipschitz_drift,
    radial_singular_drift,
    zero_drift,
)
from .lattice import Lattice, SpaceTimeField
from .stable_law import SpectralAtom, StableLaw, four_atom_law, uniform_atom_law

__all__ = ["Scenario", "load_scenario", "config_hash"]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AtomBlock(_Block):
    weight: float = Field(gt=0)
    direction: List[float]


class LawBlock(_Block):
    alpha: float = 1.5
    center: List[float] = [0.0, 0.0]
    family: Optional[Literal["four_atom", "uniform"]] = None
    weight: Optional[float] = None
    n_atoms: Optional[int] = None
    total_mass: Optional[float] = None
    atoms: Optional[List[AtomBlock]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.family is None) == (self.atoms is None):
            raise ValueError("law block needs exactly one of 'family' or 'atoms'")
        if self.family == "four_atom" and self.weight is None:
            raise ValueError("family 'four_atom' needs 'weight'")
        if self.family == "uniform" and (self.n_atoms is None or self.total_mass is None):
            raise ValueError("family 'uniform' needs 'n_atoms' and 'total_mass'")
        return self

    def build(self) -> StableLaw:
        if self.family == "four_atom":
            return four_atom_law(self.weight, self.alpha, tuple(self.center))
        if self.family == "uniform":
            return uniform_atom_law(self.n_atoms, self.total_mass, self.alpha, tuple(self.center))
        atoms = tuple(SpectralAtom(a.weight, tuple(a.direction)) for a in self.atoms)
        return StableLaw(self.alpha, tuple(self.center), atoms)


class GridBlock(_Block):
    extent: float = Field(gt=0)
    points: int


class LatticeBlock(_Block):
    extent: float = Field(gt=0)
    points: int = Field(gt=1)


class DriftBlock(_Block):
    family: Literal["zero", "constant", "lipschitz", "radial_singular", "file"]
    lattice: LatticeBlock
    horizon: float = Field(default=1.0, gt=0)
    dt: float = Field(default=0.025, gt=0)
    p: float = 12.0
    q: float = 12.0
    vector: Optional[List[float]] = None
    amplitude: Optional[float] = None
    theta: Optional[float] = None
    radius: float = 1.0
    inward: bool = True
    b1_vector: Optional[List[float]] = None
    path: Optional[str] = None
    M: Optional[float] = None

    @model_validator(mode="after")
    def _params(self):
        need = {
            "constant": ["vector"],
            "lipschitz": ["amplitude"],
            "radial_singular": ["amplitude", "theta"],
            "file": ["path"],
        }.get(self.family, [])
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"drift family '{self.family}' needs {missing}")
        if self.p < 1 or self.q < 1:
            raise ValueError("lattice norms need p, q >= 1")
        return self

    def build(self, dim: int, base: Path | None = None) -> DriftField:
        lat = Lattice(dim, self.lattice.extent, self.lattice.points)
        if self.family == "zero":
            return zero_drift(lat, self.horizon, self.dt, self.p, self.q)
        if self.family == "constant":
            return constant_drift(lat, self.vector, self.horizon, self.dt, self.p, self.q)
        if self.family == "lipschitz":
            return lipschitz_drift(lat, self.amplitude, self.horizon, self.dt, self.p, self.q)
        if self.family == "radial_singular":
            return radial_singular_drift(
                lat, self.amplitude, self.theta, self.horizon, self.dt, self.p, self.q,
                radius=self.radius, inward=self.inward, b1_vector=self.b1_vector,
            )
        path = Path(self.path)
        if base is not None and not path.is_absolute():
            path = base / path
        b2 = SpaceTimeField.load(path)
        if b2.lattice.extent != self.lattice.extent or b2.lattice.points != self.lattice.points:
            raise ValueError("slice file lattice differs from the drift block")
        if not b2.is_vector:
            raise ValueError("slice file must hold a vector field")
        zero = SpaceTimeField(b2.lattice, 0.0 * b2.values, b2.dt)
        return DriftField(zero, b2, 0.0 if self.M is None else self.M, self.p, self.q, label="file")


class ResolventBlock(_Block):
    lambdas: List[float] = [1.0, 2.0, 4.0, 8.0, 16.0]
    eps0: float = 1e-3
    refine_check: bool = True


class SeriesBlock(_Block):
    tol: float = Field(default=1e-6, gt=0)
    margin: float = Field(default=0.01, gt=0, lt=1)
    lambda_factor: float = Field(default=2.0, gt=1)
    max_terms: int = 500
    probes: List[List[float]] = []


class SimBlock(_Block):
    h: float = Field(default=1e-3, gt=0, le=0.01)
    T_sim: float = Field(default=2.5, gt=0)
    paths: int = Field(default=100_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    start_s: float = 0.0
    start_x: List[float] = [0.0, 0.0]
    checkpoints: List[float] = [0.5]
    level: Optional[int] = Field(default=None, ge=1)
    levels: List[int] = [8, 32]
    block_size: int = Field(default=8192, ge=1)


class TargetBlock(_Block):
    center: List[float] = [0.2, 0.1]
    width: float = Field(default=0.3, gt=0)
    decay: float = Field(default=8.0, gt=0)


class ChecksBlock(_Block):
    admissibility: List[List[float]] = [[2, 1.5, 12, 12], [2, 1.5, 4, 4], [2, 1.5, 8, 6]]
    generator_points: List[List[float]] = [[0.0, 0.0], [0.3, -0.2], [1.0, 0.5]]
    generator_modes: List[List[float]] = [[1.0, 0.0], [2.0, -1.0], [0.5, 3.0]]


class OutputsBlock(_Block):
    directory: str = "out"
    formats: List[Literal["csv", "json"]] = ["csv", "json"]


class Scenario(_Block):
    law: LawBlock
    grid: GridBlock
    drift: Optional[DriftBlock] = None
    resolvent: ResolventBlock = ResolventBlock()
    series: SeriesBlock = SeriesBlock()
    sim: SimBlock = SimBlock()
    target: TargetBlock = TargetBlock()
    checks: ChecksBlock = ChecksBlock()
    outputs: OutputsBlock = OutputsBlock()

    @model_validator(mode="after")
    def _dims(self):
        d = len(self.law.center)
        if len(self.sim.start_x) != d:
            raise ValueError("sim.start_x has the wrong dimension")
        for pr in self.series.probes:
            if len(pr) != d + 1:
                raise ValueError("series probes are [s, x1, ..., xd]")
        return self

    def require(self, *blocks: str):
        for b in blocks:
            if getattr(self, b) is None:
                raise ValueError(f"scenario needs a '{b}' block")


def load_scenario(path) -> tuple[Scenario, dict]:
    """Parse and validate a scenario file; returns the model and the raw dict."""
    text = Path(path).read_text()
    raw = json.loads(text)
    return Scenario.model_validate(raw), raw


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
