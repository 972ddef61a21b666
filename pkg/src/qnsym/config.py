"""JSON run configuration for ``qnsym eval``.

Example::

    {
      "model": {"kind": "tfim", "n_sites": 8, "coupling": 1.5, "periodic": true},
      "state": {"kind": "thermal", "beta": 1.0},
      "observable": {"kind": "collective-z"},
      "times": [0.0, 2.0, null],
      "grid": {"start": 2.05, "stop": 8.0, "step": 0.05},
      "correlations": ["C:+-+", "W:213", {"label": "C:++", "times": [0.0, null]}],
      "theorems": [{"theorem": "T", "sigma": "213", "times": [0.0, 2.0, 5.0]}],
      "tolerance": 1e-9,
      "output": {"csv": "eval.csv", "json": "eval.json"}
    }

``null`` in a times list marks the swept time.  Wightman labels use the trace
string (``"W:213"`` is ``Tr[B2 B1 B3 rho]``); CTOC labels write ``eta_n``
first.  Model kinds: ``tfim`` (``n_sites``, ``coupling``, ``field``,
``periodic``, ``t_breaking``) and ``field`` (``H = strength * sum_j P_j`` for
a Pauli ``axis``).  State kinds: ``product-c``, ``thermal`` (``beta``,
default 1.0), ``maximally-mixed``.  Observable kinds: ``collective-z`` and
``pauli`` (``site``, ``axis``).  The optional ``route_checks`` object
(``instances``, ``seed``, ``tolerance``) cross-checks the two CTOC evaluation
routes on random Hermitian instances.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contour import EtaVector, Permutation

DEFAULT_BETA = 1.0
DEFAULT_TOLERANCE = 1e-9


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "tfim"
    n_sites: int = 8
    coupling: float = 1.5
    field: float = 1.0
    periodic: bool = True
    t_breaking: float = 0.0
    axis: str = "x"
    strength: float = 1.0


@dataclass(frozen=True)
class StateSpec:
    kind: str = "product-c"
    beta: float = DEFAULT_BETA


@dataclass(frozen=True)
class ObservableSpec:
    kind: str = "collective-z"
    site: int = 1
    axis: str = "z"


@dataclass(frozen=True)
class CorrelationRequest:
    label: str
    kind: str          # "C" or "W"
    code: object       # EtaVector or Permutation
    times: tuple       # None marks the swept time


@dataclass(frozen=True)
class TheoremRequest:
    theorem: str
    sigma: Permutation
    times: tuple


@dataclass(frozen=True)
class RouteCheckSpec:
    instances: int = 200
    seed: int = 0
    tolerance: float = 1e-12


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        return make_grid(self.start, self.stop, self.step)


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    state: StateSpec
    observable: ObservableSpec
    correlations: tuple = ()
    theorems: tuple = ()
    grid: GridSpec | None = None
    tolerance: float = DEFAULT_TOLERANCE
    output: dict = field(default_factory=dict)
    route_checks: RouteCheckSpec | None = None

    @property
    def axis(self) -> int | None:
        for req in self.correlations:
            if None in req.times:
                return req.times.index(None) + 1
        return None


def make_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive, evenly spaced grid with values rounded to 12 decimals."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must not precede start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def _get(obj: dict, key: str, path: str, types, default=...):
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    value = obj[key]
    if types is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types) or (types is not bool and isinstance(value, bool)):
        raise ConfigError(f"{path}.{key}", f"expected {getattr(types, '__name__', types)}, got {value!r}")
    return value


def _section(raw: dict, key: str, default: dict | None = None) -> dict:
    value = raw.get(key, default)
    if not isinstance(value, dict):
        raise ConfigError(key, "expected an object")
    return value


def _parse_model(raw: dict) -> ModelSpec:
    kind = _get(raw, "kind", "model", str, "tfim")
    n = _get(raw, "n_sites", "model", int, 8)
    if kind == "tfim":
        if not 2 <= n <= 12:
            raise ConfigError("model.n_sites", "must be in 2..12 for the Ising chain")
        return ModelSpec(
            kind, n,
            coupling=_get(raw, "coupling", "model", float, 1.5),
            field=_get(raw, "field", "model", float, 1.0),
            periodic=_get(raw, "periodic", "model", bool, True),
            t_breaking=_get(raw, "t_breaking", "model", float, 0.0),
        )
    if kind == "field":
        if not 1 <= n <= 12:
            raise ConfigError("model.n_sites", "must be in 1..12")
        axis = _get(raw, "axis", "model", str, "x")
        if axis not in ("x", "y", "z"):
            raise ConfigError("model.axis", f"unknown Pauli axis {axis!r}")
        return ModelSpec(kind, n, axis=axis, strength=_get(raw, "strength", "model", float, 1.0))
    raise ConfigError("model.kind", f"unknown model kind {kind!r}")


def _parse_state(raw: dict, model: ModelSpec) -> StateSpec:
    kind = _get(raw, "kind", "state", str, "product-c")
    if kind not in ("product-c", "thermal", "maximally-mixed"):
        raise ConfigError("state.kind", f"unknown state kind {kind!r}")
    beta = _get(raw, "beta", "state", float, DEFAULT_BETA)
    if beta < 0:
        raise ConfigError("state.beta", "must be >= 0")
    if kind == "product-c" and model.n_sites % 2:
        raise ConfigError("state.kind", "product-c needs an even number of sites")
    return StateSpec(kind, beta)


def _parse_observable(raw: dict, model: ModelSpec) -> ObservableSpec:
    kind = _get(raw, "kind", "observable", str, "collective-z")
    if kind == "collective-z":
        return ObservableSpec(kind)
    if kind == "pauli":
        site = _get(raw, "site", "observable", int, 1)
        if not 1 <= site <= model.n_sites:
            raise ConfigError("observable.site", f"must be in 1..{model.n_sites}")
        axis = _get(raw, "axis", "observable", str, "z")
        if axis not in ("x", "y", "z"):
            raise ConfigError("observable.axis", f"unknown Pauli axis {axis!r}")
        return ObservableSpec(kind, site, axis)
    raise ConfigError("observable.kind", f"unknown observable kind {kind!r}")


def _parse_times(raw, path: str, allow_free: bool) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(path, "expected a non-empty list of times")
    times = []
    for i, t in enumerate(raw):
        if t is None and allow_free:
            times.append(None)
        elif isinstance(t, (int, float)) and not isinstance(t, bool):
            times.append(float(t))
        else:
            raise ConfigError(f"{path}[{i}]", f"expected a number{' or null' if allow_free else ''}")
    if times.count(None) > 1:
        raise ConfigError(path, "at most one time may be swept (null)")
    fixed = [t for t in times if t is not None]
    if any(b <= a for a, b in zip(fixed, fixed[1:])):
        raise ConfigError(path, f"times must be strictly increasing, got {raw}")
    return tuple(times)


def _parse_label(text: str, path: str):
    try:
        kind, code = text.split(":", 1)
        if kind == "C":
            return kind, EtaVector.parse(code)
        if kind == "W":
            return kind, Permutation.from_trace(code)
    except ValueError as exc:
        raise ConfigError(path, f"bad correlation label {text!r}: {exc}") from None
    raise ConfigError(path, f"label {text!r} must start with 'C:' or 'W:'")


def _parse_correlations(raw, default_times) -> tuple:
    if not isinstance(raw, list):
        raise ConfigError("correlations", "expected a list")
    out = []
    for i, entry in enumerate(raw):
        path = f"correlations[{i}]"
        if isinstance(entry, str):
            label, times_raw = entry, None
        elif isinstance(entry, dict):
            label = _get(entry, "label", path, str)
            times_raw = entry.get("times")
        else:
            raise ConfigError(path, "expected a label string or an object")
        kind, code = _parse_label(label, path)
        if times_raw is None:
            if default_times is None:
                raise ConfigError(path, "no times given and no top-level 'times'")
            times = default_times
            times_path = "times"
        else:
            times = _parse_times(times_raw, f"{path}.times", allow_free=True)
            times_path = f"{path}.times"
        if len(times) != len(code):
            raise ConfigError(times_path, f"{label} has order {len(code)} but {len(times)} times")
        out.append(CorrelationRequest(f"{kind}:{code if kind == 'C' else code.trace_label()}",
                                      kind, code, times))
    return tuple(out)


def _parse_theorems(raw) -> tuple:
    if not isinstance(raw, list):
        raise ConfigError("theorems", "expected a list")
    out = []
    for i, entry in enumerate(raw):
        path = f"theorems[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(path, "expected an object")
        theorem = _get(entry, "theorem", path, str)
        if theorem not in ("C", "T", "S"):
            raise ConfigError(f"{path}.theorem", "must be 'C', 'T' or 'S'")
        try:
            sigma = Permutation.from_trace(_get(entry, "sigma", path, str))
        except ValueError as exc:
            raise ConfigError(f"{path}.sigma", str(exc)) from None
        times = _parse_times(_get(entry, "times", path, list), f"{path}.times", allow_free=False)
        if len(times) != sigma.n:
            raise ConfigError(f"{path}.times", f"expected {sigma.n} times")
        out.append(TheoremRequest(theorem, sigma, times))
    return tuple(out)


def _parse_grid(raw) -> GridSpec:
    if not isinstance(raw, dict):
        raise ConfigError("grid", "expected an object")
    grid = GridSpec(_get(raw, "start", "grid", float), _get(raw, "stop", "grid", float),
                    _get(raw, "step", "grid", float))
    try:
        grid.values()
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    return grid


def check_grid_order(config: RunConfig, grid: np.ndarray) -> None:
    """Every grid value must keep each correlation's times strictly increasing."""
    for i, req in enumerate(config.correlations):
        if None not in req.times:
            continue
        k = req.times.index(None)
        lo = req.times[k - 1] if k > 0 else -np.inf
        hi = req.times[k + 1] if k + 1 < len(req.times) else np.inf
        bad = grid[(grid <= lo) | (grid >= hi)]
        if bad.size:
            raise ConfigError(
                f"correlations[{i}]",
                f"swept t{k + 1}={bad[0]:g} violates time ordering ({lo:g} < t{k + 1} < {hi:g})")


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    known = {"model", "state", "observable", "times", "grid", "correlations", "theorems",
             "tolerance", "output", "route_checks"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown field")
    model = _parse_model(_section(raw, "model", {}))
    state = _parse_state(_section(raw, "state", {}), model)
    observable = _parse_observable(_section(raw, "observable", {}), model)
    default_times = _parse_times(raw["times"], "times", True) if "times" in raw else None
    correlations = _parse_correlations(raw.get("correlations", []), default_times)
    theorems = _parse_theorems(raw.get("theorems", []))
    grid = _parse_grid(raw["grid"]) if "grid" in raw else None

    axes = {req.times.index(None) + 1 for req in correlations if None in req.times}
    if len(axes) > 1:
        raise ConfigError("correlations", f"all swept times must share one axis, got t{sorted(axes)}")
    if axes and grid is None:
        raise ConfigError("grid", "a swept time (null) requires a grid")
    if grid is not None and not axes:
        raise ConfigError("grid", "grid given but no correlation has a swept time (null)")

    tolerance = _get(raw, "tolerance", "<root>", float, DEFAULT_TOLERANCE)
    if tolerance <= 0:
        raise ConfigError("tolerance", "must be positive")
    output = _section(raw, "output", {})
    for key, value in output.items():
        if key not in ("csv", "json") or not isinstance(value, str):
            raise ConfigError(f"output.{key}", "expected 'csv' or 'json' with a path string")

    route_checks = None
    if "route_checks" in raw:
        rc = _section(raw, "route_checks")
        route_checks = RouteCheckSpec(
            _get(rc, "instances", "route_checks", int, 200),
            _get(rc, "seed", "route_checks", int, 0),
            _get(rc, "tolerance", "route_checks", float, 1e-12))
        if route_checks.instances < 1:
            raise ConfigError("route_checks.instances", "must be positive")

    config = RunConfig(model, state, observable, correlations, theorems, grid, tolerance, output,
                       route_checks)
    if grid is not None:
        check_grid_order(config, grid.values())
    return config


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(raw)
