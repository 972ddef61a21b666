"""Generalized particle-hole (C), time-reversal (T) and chiral (S) symmetry.

A transform is any invertible matrix ``M``; unitarity is not required.  For a
Hermitian ``H`` and state ``rho`` the defining relations are

* C: ``M H^T M^-1 = -H`` and ``M rho^T M^-1 = rho``
* T: ``M H^* M^-1 = +H`` and ``M rho^* M^-1 = rho``
* S: ``M H M^-1 = -H``   and ``M rho M^-1 = rho``

All checks compare residuals relative to the largest entry of the target, so
they are unchanged under ``M -> c M``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .contour import EtaVector, Permutation, reverse_sigma, s_transform_label, t_transform_label
from .correlations import CorrelationEngine, WightmanSpec
from .operators import as_matrix, pauli_string

SYMMETRY_TOL = 1e-10
THEOREM_TOL = 1e-9
STATIONARY_TOL = 1e-10

PARITY_SYMBOL = {"C": "alpha", "T": "beta", "S": "gamma"}


class SymmetryError(ValueError):
    """A symmetry precondition of a verification does not hold."""


class SymmetryTransform:
    def __init__(self, kind: str, matrix):
        if kind not in ("C", "T", "S"):
            raise ValueError(f"kind must be one of C, T, S; got {kind!r}")
        m = as_matrix(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"transform must be square, got shape {m.shape}")
        scale = np.max(np.abs(m))
        if scale == 0 or not np.all(np.isfinite(m)):
            raise np.linalg.LinAlgError("transform matrix is singular")
        # |det| > 1e-12 * scale**dim, compared in log space
        sign, logdet = np.linalg.slogdet(m / scale)
        if sign == 0 or logdet < np.log(1e-12) or not np.isfinite(np.linalg.cond(m)):
            raise np.linalg.LinAlgError("transform matrix is singular")
        self.kind = kind
        self.matrix = m
        self.inverse = np.linalg.inv(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"SymmetryTransform({self.kind!r}, dim={self.dim})"

    def conjugate(self, a) -> np.ndarray:
        """``M f(A) M^-1`` where ``f`` is transpose, conjugate or identity per kind."""
        a = as_matrix(a)
        if a.shape != self.matrix.shape:
            raise ValueError(f"dimension mismatch: transform {self.matrix.shape}, operand {a.shape}")
        if self.kind == "C":
            a = a.T
        elif self.kind == "T":
            a = a.conj()
        return self.matrix @ a @ self.inverse

    def scaled(self, c: complex) -> SymmetryTransform:
        return SymmetryTransform(self.kind, c * self.matrix)


class Parity(NamedTuple):
    value: int
    kind: str

    @property
    def symbol(self) -> str:
        return PARITY_SYMBOL[self.kind]


def _relative_residual(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.max(np.abs(b)), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b)) / scale)


def symmetry_residuals(tr: SymmetryTransform, h, rho) -> tuple[float, float]:
    h = as_matrix(h)
    rho = as_matrix(rho)
    h_sign = 1 if tr.kind == "T" else -1
    return (_relative_residual(tr.conjugate(h), h_sign * h),
            _relative_residual(tr.conjugate(rho), rho))


def check_symmetry(tr: SymmetryTransform, h, rho, tol: float = SYMMETRY_TOL) -> bool:
    return max(symmetry_residuals(tr, h, rho)) <= tol


def observable_parity(tr: SymmetryTransform, b, tol: float = SYMMETRY_TOL) -> Parity | None:
    """``+1`` or ``-1`` when ``M f(B) M^-1 = +-B``; ``None`` without definite parity."""
    b = as_matrix(b)
    image = tr.conjugate(b)
    for value in (1, -1):
        if _relative_residual(image, value * b) <= tol:
            return Parity(value, tr.kind)
    return None


def compose_S(c: SymmetryTransform, t: SymmetryTransform, h, rho,
              tol: float = SYMMETRY_TOL) -> SymmetryTransform:
    """Chiral transform ``C T^-1``.

    For Hermitian ``H`` we have ``H^T = H^*``, so substituting the T relation
    into the C relation gives ``(C T^-1) H (C T^-1)^-1 = -H``.
    """
    if c.kind != "C" or t.kind != "T":
        raise ValueError("compose_S needs a C transform and a T transform")
    if c.dim != t.dim:
        raise ValueError(f"dimension mismatch: C is {c.dim}, T is {t.dim}")
    for tr in (c, t):
        if not check_symmetry(tr, h, rho, tol):
            raise SymmetryError(f"{tr.kind} is not a symmetry of the supplied H and rho")
    s = SymmetryTransform("S", c.matrix @ t.inverse)
    if not check_symmetry(s, h, rho, tol):
        raise SymmetryError("composed S transform fails verification")
    return s


class Rule(str, enum.Enum):
    FORBIDDEN = "forbidden"
    ALLOWED = "allowed"


def selection_rule(eta: Sequence, alphas: Sequence[int]) -> Rule:
    """CTOC forced to vanish when ``prod(eta) * prod(alpha) = -1``."""
    eta = eta if isinstance(eta, EtaVector) else EtaVector(eta)
    if len(alphas) != eta.n:
        raise ValueError(f"{len(alphas)} parities for a sign vector of length {eta.n}")
    if any(a not in (1, -1) for a in alphas):
        raise ValueError(f"parities must be +1 or -1, got {alphas}")
    product = int(np.prod(eta)) * int(np.prod(alphas))
    return Rule.FORBIDDEN if product == -1 else Rule.ALLOWED


@dataclass
class TheoremReport:
    theorem: str
    lhs: complex
    rhs: complex
    deviation: float
    tolerance: float
    passed: bool = field(init=False)
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.deviation <= self.tolerance)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lhs"] = [self.lhs.real, self.lhs.imag]
        out["rhs"] = [self.rhs.real, self.rhs.imag]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _parities(tr: SymmetryTransform, observables, n: int) -> list[int]:
    if not isinstance(observables, (list, tuple)):
        observables = (observables,) * n
    values = []
    for k, b in enumerate(observables, start=1):
        p = observable_parity(tr, b)
        if p is None:
            raise SymmetryError(f"observable {k} has no definite {tr.kind}-parity")
        values.append(p.value)
    return values


def _require_symmetry(tr: SymmetryTransform, kind: str, h, rho) -> None:
    if tr.kind != kind:
        raise ValueError(f"expected a {kind} transform, got {tr.kind}")
    residuals = symmetry_residuals(tr, h, rho)
    if max(residuals) > SYMMETRY_TOL:
        raise SymmetryError(
            f"{kind} symmetry does not hold (H residual {residuals[0]:.2e}, "
            f"rho residual {residuals[1]:.2e})")


def _require_stationary(h, rho) -> None:
    h = as_matrix(h)
    rho = as_matrix(rho)
    comm = rho @ h - h @ rho
    if np.max(np.abs(comm)) > STATIONARY_TOL * max(np.max(np.abs(h)), 1.0):
        raise SymmetryError("the initial state does not commute with H (not stationary)")


def _params(sigma, times, parities) -> dict:
    return {"sigma": str(sigma), "trace": sigma.trace_label(), "times": list(times),
            "parities": parities}


def verify_theorem1(sigma, times, observables, c: SymmetryTransform, h, rho,
                    tol: float = THEOREM_TOL) -> TheoremReport:
    """``W^{reversed sigma} = W^sigma * prod(alpha)``."""
    _require_symmetry(c, "C", h, rho)
    spec = WightmanSpec(sigma, times, observables)
    alphas = _parities(c, spec.observables, spec.n)
    engine = CorrelationEngine(h, rho)
    lhs = engine.wightman(WightmanSpec(reverse_sigma(spec.sigma), spec.times, spec.observables))
    rhs = engine.wightman(spec) * int(np.prod(alphas))
    return TheoremReport("C", lhs, rhs, abs(lhs - rhs), tol,
                         parameters=_params(spec.sigma, spec.times, alphas))


def _time_reversal_report(theorem: str, spec: WightmanSpec, raw_order: Sequence[int],
                          label_map, parities, engine: CorrelationEngine,
                          tol: float) -> TheoremReport:
    # direct evaluation at negated times, innermost factor first
    negated = [(spec.observables[k - 1], -spec.times[k - 1]) for k in raw_order]
    direct = engine.trace_string(negated)
    canonical = engine.wightman(WightmanSpec(
        label_map.sigma, label_map.times.apply(spec.times),
        tuple(spec.observables[j - 1] for j in label_map.times.source)))
    sign = int(np.prod(parities))
    lhs = engine.wightman(spec)
    rhs = sign * direct
    params = _params(spec.sigma, spec.times, parities)
    params["canonical_sigma"] = str(label_map.sigma)
    params["canonical_trace"] = label_map.sigma.trace_label()
    params["canonical_times"] = list(label_map.times.apply(spec.times))
    params["label_map_deviation"] = abs(direct - canonical)
    deviation = max(abs(lhs - rhs), abs(direct - canonical))
    return TheoremReport(theorem, lhs, rhs, deviation, tol, parameters=params)


def verify_theorem2(sigma, times, observables, t: SymmetryTransform, h, rho,
                    tol: float = THEOREM_TOL) -> TheoremReport:
    """``W^sigma(t) = prod(beta) * W^{reversed sigma}(-t)`` for a stationary state.

    The right side is evaluated directly at negative times and again through
    the canonical relabelling of :func:`t_transform_label`; the report's
    deviation covers both comparisons.
    """
    _require_symmetry(t, "T", h, rho)
    _require_stationary(h, rho)
    spec = WightmanSpec(sigma, times, observables)
    betas = _parities(t, spec.observables, spec.n)
    # W^{reversed sigma}: the operator adjacent to rho is B_sigma(n)
    raw_order = tuple(reversed(spec.sigma))
    return _time_reversal_report("T", spec, raw_order, t_transform_label(spec.sigma),
                                 betas, CorrelationEngine(h, rho), tol)


def verify_theorem3(sigma, times, observables, s: SymmetryTransform, h, rho,
                    tol: float = THEOREM_TOL) -> TheoremReport:
    """``W^sigma(t) = prod(gamma) * W^sigma(-t)`` for a stationary state."""
    _require_symmetry(s, "S", h, rho)
    _require_stationary(h, rho)
    spec = WightmanSpec(sigma, times, observables)
    gammas = _parities(s, spec.observables, spec.n)
    return _time_reversal_report("S", spec, tuple(spec.sigma), s_transform_label(spec.sigma),
                                 gammas, CorrelationEngine(h, rho), tol)


def tfim_c_transform(n_sites: int) -> SymmetryTransform:
    """``prod_l X_{2l-1} Y_{2l}``: particle-hole transform of the Ising chain."""
    if n_sites % 2:
        raise ValueError("the Ising C transform needs an even number of sites")
    factors = {}
    for l in range(1, n_sites // 2 + 1):
        factors[2 * l - 1] = "x"
        factors[2 * l] = "y"
    return SymmetryTransform("C", pauli_string(n_sites, factors))


def tfim_t_transform(n_sites: int) -> SymmetryTransform:
    """``prod_l Z_l``: time-reversal transform of the Ising chain."""
    return SymmetryTransform("T", pauli_string(n_sites, {j: "z" for j in range(1, n_sites + 1)}))
