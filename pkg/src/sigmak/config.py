"""Run configuration: schema validation and construction of solver inputs."""
from dataclasses import dataclass
from importlib import resources
import json
from pathlib import Path

import jsonschema

from .catalog import scalar_field, tensor_field
from .errors import ConfigError, DomainError
from .fieldio import read_field
from .geometry import TorusGrid
from .pde import Problem, PsiSpec
from .solver import SolverOptions

VARIANTS = ("standard", "negative-experimental", "determinant-normalized",
            "determinant-fixed-point")


def load_schema():
    text = resources.files("sigmak").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @property
    def variant(self):
        return self.raw.get("variant", "standard")

    @property
    def seed(self):
        return int(self.raw.get("seed", 0))

    def path(self, rel):
        """Resolve a path given in the config relative to the config file."""
        return self.base_dir / rel

    def grid(self, sizes=None):
        sizes = tuple(sizes or self.raw["sizes"])
        lengths = self.raw.get("lengths")
        try:
            return TorusGrid(sizes, tuple(lengths) if lengths else None)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def options(self):
        try:
            return SolverOptions(**self.raw.get("solver", {}))
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def scalar(self, spec, grid):
        if "file" in spec:
            u = read_field(self.path(spec["file"]))
            if u.grid != grid:
                raise ConfigError(f"{spec['file']}: grid does not match the config")
            return u
        return scalar_field(spec, grid)

    def problem(self, grid=None):
        grid = grid or self.grid()
        raw = self.raw
        psi = raw.get("psi", {})
        default_a = -2.0 if self.variant.startswith("determinant") else 1.0
        a = float(psi.get("a", default_a))
        sign = "negative" if self.variant == "negative-experimental" else "positive"
        try:
            S = tensor_field(raw["S"], grid)
            f = self.scalar(psi.get("f", {"shape": "constant", "base": 1.0}), grid)
            return Problem(grid, int(raw["k"]), S, PsiSpec(f, a), sign)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path, experimental=False):
    """Read, validate and return a :class:`RunConfig`; raises ConfigError."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from exc
    d = raw["dimension"]
    if len(raw["sizes"]) != d:
        raise ConfigError(f"{path}: sizes must have {d} entries")
    if "lengths" in raw and len(raw["lengths"]) != d:
        raise ConfigError(f"{path}: lengths must have {d} entries")
    if raw["k"] > d:
        raise ConfigError(f"{path}: k={raw['k']} exceeds dimension {d}")
    variant = raw.get("variant", "standard")
    if variant == "negative-experimental" and not (experimental or raw.get("experimental")):
        raise ConfigError(f"{path}: the negative-experimental variant needs the "
                          "experimental acknowledgement (--experimental)")
    if variant.startswith("determinant") and raw["k"] != d:
        raise ConfigError(f"{path}: determinant variants need k = dimension")
    return RunConfig(raw, path.parent)
