"""Numerical Wightman correlations and nested (anti)commutator CTOCs.

Every evaluation happens in the eigenbasis of ``H``: there the Heisenberg
evolution of an operator is an element-wise phase, and traces are basis
independent.  Products are accumulated right to left starting from ``rho``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .contour import EtaVector, Permutation, expand_ctoc
from .operators import HERMITIAN_TOL, as_matrix, hermiticity_residual, spectrum_of

IMAG_TOL = 1e-10
ZERO_TOL = 1e-8
CACHE_BYTES = 256 * 2**20


class _LRU(OrderedDict):
    """Least-recently-used matrix store bounded by total bytes."""

    def __init__(self, budget: int):
        super().__init__()
        self.budget = budget
        self.nbytes = 0

    def get(self, key, default=None):
        if key in self:
            self.move_to_end(key)
            return self[key]
        return default

    def put(self, key, value: np.ndarray) -> None:
        if value.nbytes > self.budget:
            return
        self[key] = value
        self.nbytes += value.nbytes
        while self.nbytes > self.budget:
            _, old = self.popitem(last=False)
            self.nbytes -= old.nbytes

    def clear(self):
        super().clear()
        self.nbytes = 0


def _check_times(times: Sequence[float], n: int) -> tuple:
    times = tuple(float(t) for t in times)
    if len(times) != n:
        raise ValueError(f"expected {n} times, got {len(times)}")
    if any(math.isnan(t) for t in times):
        raise ValueError("times must not be NaN")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError(f"times must be strictly increasing, got {times}")
    return times


def _check_observables(observables, n: int) -> tuple:
    if not isinstance(observables, (list, tuple)):
        observables = (observables,) * n
    observables = tuple(observables)
    if len(observables) != n:
        raise ValueError(f"expected {n} observables, got {len(observables)}")
    for b in observables:
        if hermiticity_residual(b) > HERMITIAN_TOL:
            raise ValueError("observables must be Hermitian")
    return observables


@dataclass(frozen=True)
class WightmanSpec:
    """``Tr[B_sigma(n)(t_sigma(n)) ... B_sigma(1)(t_sigma(1)) rho]``.

    ``observables[i]`` is the operator measured at ``times[i]``; a single
    operator is broadcast to every slot.
    """

    sigma: Permutation
    times: tuple
    observables: tuple = field(repr=False)

    def __post_init__(self):
        sigma = Permutation(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "times", _check_times(self.times, sigma.n))
        object.__setattr__(self, "observables", _check_observables(self.observables, sigma.n))

    @property
    def n(self) -> int:
        return self.sigma.n

    @property
    def label(self) -> str:
        return f"W:{self.sigma.trace_label()}"


@dataclass(frozen=True)
class CtocSpec:
    """``Tr[B_n^+ B_{n-1}^{eta_{n-1}} ... B_1^{eta_1} rho]``."""

    eta: EtaVector
    times: tuple
    observables: tuple = field(repr=False)

    def __post_init__(self):
        eta = self.eta
        if isinstance(eta, str):
            eta = EtaVector.parse(eta)
        elif not isinstance(eta, EtaVector):
            eta = EtaVector(eta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "times", _check_times(self.times, eta.n))
        object.__setattr__(self, "observables", _check_observables(self.observables, eta.n))

    @property
    def n(self) -> int:
        return self.eta.n

    @property
    def label(self) -> str:
        return f"C:{self.eta}"


def apply_super(b, sign, a) -> np.ndarray:
    """``+``: ``(BA + AB)/2``; ``-``: ``-i(BA - AB)``."""
    b = as_matrix(b)
    a = as_matrix(a)
    if b.shape != a.shape:
        raise ValueError(f"dimension mismatch: {b.shape} vs {a.shape}")
    ba, ab = b @ a, a @ b
    if sign in ("+", 1):
        return 0.5 * (ba + ab)
    if sign in ("-", -1):
        return -1j * (ba - ab)
    raise ValueError(f"invalid sign {sign!r}")


class CorrelationEngine:
    """Evaluates correlations for one ``(H, rho)`` pair.

    Heisenberg-evolved observables are cached per ``(operator, time)``, so one
    engine should serve a whole sweep.  Not thread-safe; use one per worker.
    """

    def __init__(self, h, rho):
        self.spectrum = spectrum_of(h)
        rho = as_matrix(rho)
        if rho.shape != (self.spectrum.dim,) * 2:
            raise ValueError(f"state shape {rho.shape} does not match H dimension {self.spectrum.dim}")
        self._rho = self.spectrum.to_eigenbasis(rho)
        self._static: dict[int, tuple] = {}
        self._evolved = _LRU(CACHE_BYTES // 2)
        # partial products keyed by the factors applied so far; in a sweep the
        # inner factors sit at fixed times and are shared across grid points
        self._prefix = _LRU(CACHE_BYTES // 2)

    def _in_eigenbasis(self, op) -> np.ndarray:
        key = id(op)
        hit = self._static.get(key)
        if hit is None:
            mat = as_matrix(op)
            if mat.shape != (self.spectrum.dim,) * 2:
                raise ValueError(f"observable shape {mat.shape} does not match H dimension {self.spectrum.dim}")
            # keep a reference so the id stays unique for the engine lifetime
            hit = (op, self.spectrum.to_eigenbasis(mat))
            self._static[key] = hit
        return hit[1]

    def evolved(self, op, t: float) -> np.ndarray:
        """``B(t)`` expressed in the eigenbasis of ``H``."""
        key = (id(op), float(t))
        out = self._evolved.get(key)
        if out is None:
            out = self.spectrum.evolve_in_eigenbasis(self._in_eigenbasis(op), t)
            self._evolved.put(key, out)
        return out

    def clear_cache(self) -> None:
        self._evolved.clear()
        self._prefix.clear()

    def _accumulate(self, steps: Sequence[tuple]) -> np.ndarray:
        """Apply ``steps = [(op, t, action), ...]`` to ``rho`` in order.

        ``action`` is ``None`` for a left product or a sign for ``apply_super``.
        """
        acc = self._rho
        key: tuple = ()
        for op, t, action in steps:
            key = key + ((id(op), float(t), action),)
            hit = self._prefix.get(key)
            if hit is None:
                b = self.evolved(op, t)
                hit = b @ acc if action is None else apply_super(b, action, acc)
                self._prefix.put(key, hit)
            acc = hit
        return acc

    def _close(self, op, t: float, acc: np.ndarray) -> complex:
        # Tr[X A] = sum_jk X_jk A_kj
        return complex(np.einsum("jk,kj->", self.evolved(op, t), acc))

    def trace_string(self, factors: Sequence[tuple]) -> complex:
        """``Tr[B_m(t_m) ... B_1(t_1) rho]`` for ``factors = [(B_1, t_1), ...]``.

        Times are unrestricted here (negative or unordered).
        """
        if not factors:
            return complex(np.trace(self._rho))
        acc = self._accumulate([(op, t, None) for op, t in factors[:-1]])
        return self._close(*factors[-1], acc)

    def wightman(self, spec: WightmanSpec) -> complex:
        factors = [(spec.observables[k - 1], spec.times[k - 1]) for k in spec.sigma]
        return self.trace_string(factors)

    def ctoc_direct(self, spec: CtocSpec) -> float:
        steps = [(spec.observables[j], spec.times[j], spec.eta[j]) for j in range(spec.n - 1)]
        acc = self._accumulate(steps)
        value = self._close(spec.observables[-1], spec.times[-1], acc)
        return _real_part(value, spec.label)

    def ctoc_via_expansion(self, spec: CtocSpec) -> float:
        value = 0j
        for term in expand_ctoc(spec.eta):
            w = self.wightman(WightmanSpec(term.sigma, spec.times, spec.observables))
            value += term.coeff * w
        return _real_part(value, spec.label)

    def evaluate(self, spec) -> complex | float:
        if isinstance(spec, WightmanSpec):
            return self.wightman(spec)
        if isinstance(spec, CtocSpec):
            return self.ctoc_direct(spec)
        raise TypeError(f"cannot evaluate {type(spec).__name__}")


def _real_part(value: complex, label: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        raise ArithmeticError(
            f"{label} has imaginary residue {value.imag:.3e}; inputs are not Hermitian?"
        )
    return value.real


def wightman(spec: WightmanSpec, h, rho) -> complex:
    return CorrelationEngine(h, rho).wightman(spec)


def ctoc_direct(spec: CtocSpec, h, rho) -> float:
    return CorrelationEngine(h, rho).ctoc_direct(spec)


def ctoc_via_expansion(spec: CtocSpec, h, rho) -> float:
    return CorrelationEngine(h, rho).ctoc_via_expansion(spec)


@dataclass(frozen=True)
class SweepTemplate:
    """A correlation whose times depend on the swept value.

    Either the entry ``times[axis - 1]`` of ``spec`` is replaced by the grid
    value, or, when ``times_at`` is given, it supplies all times directly.
    """

    spec: WightmanSpec | CtocSpec
    name: str | None = None
    times_at: Callable[[float], Sequence[float]] | None = field(default=None, compare=False)

    @property
    def label(self) -> str:
        return self.name or self.spec.label


@dataclass
class SweepResult:
    axis: str
    grid: np.ndarray
    series: dict = field(default_factory=dict)

    def columns(self) -> dict:
        """Flat real-valued columns; complex series split into ``.re``/``.im``."""
        cols = {self.axis: self.grid}
        for name, values in self.series.items():
            if np.iscomplexobj(values):
                cols[f"{name}.re"] = values.real
                cols[f"{name}.im"] = values.imag
            else:
                cols[name] = values
        return cols

    def to_csv(self, fh=None) -> str:
        cols = self.columns()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in zip(*cols.values()):
            writer.writerow(f"{float(v):.17g}" for v in row)
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_dict(self) -> dict:
        series = {}
        for name, values in self.series.items():
            if np.iscomplexobj(values):
                series[name] = {"re": values.real.tolist(), "im": values.imag.tolist()}
            else:
                series[name] = values.tolist()
        return {"axis": self.axis, "grid": self.grid.tolist(), "series": series}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _template_specs(template: SweepTemplate, axis: int, grid: np.ndarray) -> list:
    spec = template.spec
    specs = []
    for g in grid:
        if template.times_at is not None:
            times = tuple(template.times_at(float(g)))
        else:
            if not 1 <= axis <= spec.n:
                raise ValueError(f"axis t{axis} does not exist for {template.label}")
            times = list(spec.times)
            times[axis - 1] = float(g)
        try:
            specs.append(replace(spec, times=tuple(times)))
        except ValueError as exc:
            raise ValueError(f"{template.label} at t{axis}={g}: {exc}") from None
    return specs


def sweep(templates: Sequence[SweepTemplate], axis: int, grid, h, rho) -> SweepResult:
    """Evaluate each template at every grid value of ``t_axis`` (1-based)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D sequence")
    templates = [t if isinstance(t, SweepTemplate) else SweepTemplate(t) for t in templates]
    names = [t.label for t in templates]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate series names in {names}")
    # validate every point before doing any work
    planned = [_template_specs(t, axis, grid) for t in templates]

    result = SweepResult(f"t{axis}", grid)
    if not templates:
        return result
    engine = CorrelationEngine(h, rho)
    for name, specs in zip(names, planned):
        values = [engine.evaluate(s) for s in specs]
        arr = np.array(values)
        if np.any(np.isnan(arr)):
            raise ArithmeticError(f"{name} produced NaN")
        result.series[name] = arr
    return result


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Random Hermitian matrix normalized to unit operator norm."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = a + a.conj().T
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def route_deviation(instances: int = 200, seed: int = 0, max_order: int = 4,
                    dims: Sequence[int] = (4, 8)) -> float:
    """Largest ``|ctoc_direct - ctoc_via_expansion|`` over random instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        dim = int(rng.choice(dims))
        n = int(rng.integers(1, max_order + 1))
        eta = EtaVector([*rng.choice([1, -1], size=n - 1), 1])
        times = np.sort(rng.uniform(-3, 3, size=n))
        ops = tuple(random_hermitian(rng, dim) for _ in range(n))
        engine = CorrelationEngine(random_hermitian(rng, dim), random_density_matrix(rng, dim))
        spec = CtocSpec(eta, times, ops)
        worst = max(worst, abs(engine.ctoc_direct(spec) - engine.ctoc_via_expansion(spec)))
    return worst
