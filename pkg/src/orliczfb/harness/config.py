"""Experiment configuration: JSON validated against a bundled schema."""
import copy
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from importlib import resources

import jsonschema

from ..exceptions import ConfigError, ExpressionError
from ..expr import expr_parse
from ..grid import Ball, Grid
from ..phi import phi_from_dict
from ..solver.minimize import SolveOptions

__all__ = ["ExperimentConfig", "load_config", "bundled_config", "bundled_configs",
           "ESTIMATE_PARAMS", "canonical_hash"]

# estimate name -> accepted parameters (required ones listed first in docs/formats.md)
ESTIMATE_PARAMS = {
    "exact_1d": set(),
    "caccioppoli": {"balls"},
    "reverse_holder": {"balls", "s0", "t"},
    "poincare": {"balls", "s"},
    "comparison": {"balls", "s0", "beta"},
    "morrey": {"center", "radii", "sigma"},
    "holder": {"alpha", "region", "budget"},
    "gradient_excess": {"center", "radii", "alpha_min"},
    "free_boundary": set(),
    "growth": {"target", "k_min", "k_max"},
    "lipschitz": {"region", "lip_tol"},
    "blowup": {"target", "j_max", "R"},
    "maximal": set(),
    "almost_min": {"balls", "kappa", "beta"},
}
STABILITY_KEYS = {"stability_tol"}


def _schema():
    with resources.files(__package__).joinpath("config.schema.json").open() as fh:
        return json.load(fh)


def canonical_hash(data):
    """SHA-256 of the key-sorted, whitespace-free JSON encoding."""
    text = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _ball(spec, where):
    try:
        return Ball(tuple(spec["center"]), float(spec["radius"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: a ball needs 'center' and positive 'radius' ({exc})") from None


@dataclass
class ExperimentConfig:
    data: dict
    source: str = "<dict>"
    phi: object = dc_field(init=False, repr=False)

    def __post_init__(self):
        self.data = copy.deepcopy(self.data)
        self._validate()

    # -- validation ---------------------------------------------------------
    def _validate(self):
        try:
            jsonschema.validate(self.data, _schema())
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{self.source}: field '{path}': {exc.message}") from None
        dom = self.data["domain"]
        if len(dom["lo"]) != len(dom["hi"]):
            raise ConfigError(f"{self.source}: field 'domain': lo and hi differ in length")
        for n in self.data["resolutions"]:
            if n & (n - 1):
                raise ConfigError(f"{self.source}: field 'resolutions': {n} is not a power of two")
        try:
            expr_parse(self.data["boundary"])
        except ExpressionError as exc:
            raise ConfigError(f"{self.source}: field 'boundary': {exc}") from None
        try:
            self.phi = phi_from_dict(self.data["phi"], (dom["lo"], dom["hi"]))
        except (ValueError, ExpressionError) as exc:
            raise ConfigError(f"{self.source}: field 'phi': {exc}") from None
        try:
            self.solve_options()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: field 'solver': {exc}") from None
        for i, est in enumerate(self.estimates):
            name = est["name"]
            where = f"{self.source}: field 'estimates/{i}'"
            if name not in ESTIMATE_PARAMS:
                raise ConfigError(f"{where}: unknown estimate {name!r}")
            extra = set(est) - {"name"} - ESTIMATE_PARAMS[name] - STABILITY_KEYS
            if extra:
                raise ConfigError(f"{where}: unknown parameter(s) {sorted(extra)} for {name}")
            for b in est.get("balls", []):
                _ball(b, where)
            if "region" in est and est["region"] is not None:
                _ball(est["region"], where)
            if name == "exact_1d" and self.d != 1:
                raise ConfigError(f"{where}: exact_1d needs a 1D domain")

    # -- accessors ----------------------------------------------------------
    @property
    def id(self):
        return self.data["id"]

    @property
    def d(self):
        return len(self.data["domain"]["lo"])

    @property
    def lam(self):
        return float(self.data["lambda"])

    @property
    def resolutions(self):
        return list(self.data["resolutions"])

    @property
    def boundary(self):
        return self.data["boundary"]

    @property
    def estimates(self):
        return self.data.get("estimates", [])

    @property
    def seed(self):
        return int(self.data.get("seed", 0))

    @property
    def output(self):
        return self.data.get("output", f"runs/{self.id}")

    def grid(self, cells):
        dom = self.data["domain"]
        return Grid(tuple(dom["lo"]), tuple(dom["hi"]), (cells + 1,) * self.d)

    def solve_options(self):
        opts = dict(self.data.get("solver", {}))
        opts.setdefault("seed", self.seed)
        return SolveOptions(**opts)

    def ball(self, spec):
        return _ball(spec, self.source)

    def with_overrides(self, seed=None, resolutions=None, output=None):
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = int(seed)
        if resolutions is not None:
            data["resolutions"] = [int(n) for n in resolutions]
        if output is not None:
            data["output"] = output
        return ExperimentConfig(data, self.source)

    def hash(self):
        """Hash of the semantic content (the output directory does not count)."""
        data = {k: v for k, v in self.data.items() if k not in ("output", "description")}
        return canonical_hash(data)


def load_config(path):
    """Read and validate a JSON config; syntax errors report line and column."""
    path = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ExperimentConfig(data, path)


def bundled_configs():
    root = resources.files(__package__).joinpath("configs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def bundled_config(name):
    if not name.endswith(".json"):
        name += ".json"
    root = resources.files(__package__).joinpath("configs")
    with resources.as_file(root.joinpath(name)) as p:
        if not p.exists():
            raise ConfigError(f"no bundled config {name!r}; available: {bundled_configs()}")
        return load_config(p)
