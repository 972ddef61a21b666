import csv
import io
import json

import numpy as np
import pytest

from oracles import ctoc_brute, random_hermitian, random_state, random_unitary, wightman_brute
from qnsym.contour import EtaVector, Permutation
from qnsym.correlations import (
    CorrelationEngine,
    CtocSpec,
    SweepTemplate,
    WightmanSpec,
    apply_super,
    ctoc_direct,
    ctoc_via_expansion,
    route_deviation,
    sweep,
    wightman,
)
from qnsym.operators import PAULI, QuantumOperator, thermal_state

X, Y, Z = PAULI["x"], PAULI["y"], PAULI["z"]
I2 = np.eye(2) / 2
UP = np.diag([1.0, 0.0])


def random_sigma(rng, n):
    return Permutation(rng.permutation(n) + 1)


# --- spec validation --------------------------------------------------------

def test_times_must_increase():
    with pytest.raises(ValueError):
        WightmanSpec((1, 2), (1.0, 1.0), Z)
    with pytest.raises(ValueError):
        CtocSpec("+-", (0.0, np.nan), Z)


def test_observables_must_be_hermitian():
    with pytest.raises(ValueError):
        WightmanSpec((1,), (0.0,), np.array([[0, 1], [0, 0]]))


def test_observable_count():
    with pytest.raises(ValueError):
        WightmanSpec((1, 2), (0.0, 1.0), [Z, Z, Z])


def test_labels():
    assert WightmanSpec((3, 1, 2), (0, 1, 2), Z).label == "W:213"
    assert CtocSpec("+-+", (0, 1, 2), Z).label == "C:+-+"


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        wightman(WightmanSpec((1,), (0.0,), np.eye(4)), Z, I2)
    with pytest.raises(ValueError):
        CorrelationEngine(Z, np.eye(4) / 4)


# --- wightman ---------------------------------------------------------------

def test_traceless_in_mixed_state():
    assert abs(wightman(WightmanSpec((1,), (0.7,), X), Z, I2)) < 1e-15


def test_commuting_eigenstate():
    for times in ((0.0, 0.5), (-3.0, 4.0)):
        w = wightman(WightmanSpec((1, 2), times, Z), Z, UP)
        assert abs(w - 1) < 1e-14


def test_two_point_closed_form_mixed_state():
    # sigma_x precesses at frequency 2 about z; the mixed state kills the odd part
    a = wightman(WightmanSpec((1, 2), (0.0, 0.4), X), Z, I2)
    b = wightman(WightmanSpec((2, 1), (0.0, 0.4), X), Z, I2)
    assert abs(a - np.conj(b)) < 1e-14
    assert abs(a - np.cos(0.8)) < 1e-14


def test_two_point_closed_form_polarized_state():
    # Tr[X(t2) X(t1) |up><up|] = exp(2i (t2 - t1))
    for t1, t2 in ((0.0, 0.4), (-1.1, 2.3)):
        w = wightman(WightmanSpec((1, 2), (t1, t2), X), Z, UP)
        assert abs(w - np.exp(2j * (t2 - t1))) < 1e-13
        assert abs(w - wightman_brute((1, 2), (t1, t2), (X, X), Z, UP)) < 1e-13


def test_against_brute_force(rng):
    for _ in range(30):
        dim = int(rng.choice([2, 4, 8]))
        n = int(rng.integers(1, 5))
        h, rho = random_hermitian(rng, dim), random_state(rng, dim)
        ops = tuple(random_hermitian(rng, dim) for _ in range(n))
        times = np.sort(rng.uniform(-4, 4, size=n))
        sigma = random_sigma(rng, n)
        w = wightman(WightmanSpec(sigma, times, ops), h, rho)
        assert abs(w - wightman_brute(sigma, times, ops, h, rho)) < 1e-11


def test_operator_norm_bound(rng):
    for _ in range(30):
        dim = 4
        n = int(rng.integers(1, 5))
        ops = tuple(random_hermitian(rng, dim) for _ in range(n))   # unit norm each
        spec = WightmanSpec(random_sigma(rng, n), np.sort(rng.uniform(0, 5, n)), ops)
        assert abs(wightman(spec, random_hermitian(rng, dim), random_state(rng, dim))) <= 1 + 1e-12


def test_hermitian_conjugate_pairing(rng):
    # conj(Tr[B_s(n)...B_s(1) rho]) = Tr[B_s(1)...B_s(n) rho]
    for _ in range(20):
        n = int(rng.integers(1, 5))
        ops = tuple(random_hermitian(rng, 4) for _ in range(n))
        times = np.sort(rng.uniform(-3, 3, n))
        h, rho = random_hermitian(rng, 4), random_state(rng, 4)
        sigma = random_sigma(rng, n)
        engine = CorrelationEngine(h, rho)
        w = engine.wightman(WightmanSpec(sigma, times, ops))
        w_rev = engine.wightman(WightmanSpec(tuple(reversed(sigma)), times, ops))
        assert abs(np.conj(w) - w_rev) < 1e-12


def test_trace_string_accepts_negative_unordered_times():
    engine = CorrelationEngine(Z, UP)
    got = engine.trace_string([(X, 0.3), (X, -1.0)])
    assert abs(got - np.exp(2j * (-1.0 - 0.3))) < 1e-13


# --- apply_super ------------------------------------------------------------

def test_apply_super_commuting():
    np.testing.assert_array_equal(apply_super(Z, "-", np.diag([0.3, 0.7])), np.zeros((2, 2)))


def test_apply_super_identity():
    np.testing.assert_allclose(apply_super(X, "+", np.eye(2)), X)


def test_apply_super_expectation(rng):
    for _ in range(10):
        b, rho = random_hermitian(rng, 4), random_state(rng, 4)
        assert abs(np.trace(apply_super(b, "+", rho)) - np.trace(b @ rho)) < 1e-13


def test_apply_super_preserves_hermiticity(rng):
    b, a = random_hermitian(rng, 8), random_hermitian(rng, 8)
    for sign in "+-":
        out = apply_super(b, sign, a)
        assert np.max(np.abs(out - out.conj().T)) < 1e-13


def test_apply_super_errors():
    with pytest.raises(ValueError):
        apply_super(Z, "+", np.eye(4))
    with pytest.raises(ValueError):
        apply_super(Z, "*", np.eye(2))


# --- ctoc -------------------------------------------------------------------

def test_ctoc_commutator_vanishes_for_conserved_observable():
    assert abs(ctoc_direct(CtocSpec("+-", (0.0, 1.3), Z), Z, UP)) < 1e-15


def test_ctoc_fluctuation_closed_form():
    for t in (0.1, 0.9, 2.5):
        got = ctoc_direct(CtocSpec("++", (0.0, t), Z), X, I2)
        assert abs(got - np.cos(2 * t)) < 1e-13


def test_ctoc_commutator_is_response():
    # C^{+-} = -i <[B(t2), B(t1)]>
    h, b = X, Z
    t1, t2 = 0.0, 0.7
    spec = CtocSpec("+-", (t1, t2), b)
    w12 = wightman(WightmanSpec((1, 2), (t1, t2), b), h, UP)
    w21 = wightman(WightmanSpec((2, 1), (t1, t2), b), h, UP)
    expected = (-1j * (w12 - w21)).real
    assert abs(ctoc_via_expansion(spec, h, UP) - expected) < 1e-14
    assert abs(ctoc_direct(spec, h, UP) - expected) < 1e-14


def test_ctoc_single_operator():
    spec = CtocSpec("+", (0.4,), X)
    assert abs(ctoc_direct(spec, Z, UP)) < 1e-15
    mixed = (UP + X / 2)                # <x> = 1 before precession
    assert abs(ctoc_direct(spec, Z, mixed) - np.cos(0.8)) < 1e-14
    assert abs(ctoc_via_expansion(spec, Z, mixed) - np.cos(0.8)) < 1e-14


def test_ctoc_against_brute_force(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        eta = EtaVector([*rng.choice([1, -1], size=n - 1), 1])
        ops = tuple(random_hermitian(rng, 4) for _ in range(n))
        times = np.sort(rng.uniform(-3, 3, n))
        h, rho = random_hermitian(rng, 4), random_state(rng, 4)
        expected = ctoc_brute(eta, times, ops, h, rho)
        assert abs(expected.imag) < 1e-12
        assert abs(ctoc_direct(CtocSpec(eta, times, ops), h, rho) - expected.real) < 1e-11


def test_ctoc_reality_on_random_instances(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        eta = EtaVector([*rng.choice([1, -1], size=n - 1), 1])
        spec = CtocSpec(eta, np.sort(rng.uniform(-3, 3, n)),
                        tuple(random_hermitian(rng, 8) for _ in range(n)))
        engine = CorrelationEngine(random_hermitian(rng, 8), random_state(rng, 8))
        assert isinstance(engine.ctoc_direct(spec), float)


def test_ctoc_flags_imaginary_residue():
    # a non-Hermitian "state" makes the nested result complex
    rho = np.array([[0.5, 0.5j], [0.5j, 0.5]])
    with pytest.raises(ArithmeticError):
        ctoc_direct(CtocSpec("+", (0.0,), X), Z, rho)


def test_routes_agree_n3_dim4(rng):
    for _ in range(20):
        eta = EtaVector([*rng.choice([1, -1], size=2), 1])
        spec = CtocSpec(eta, np.sort(rng.uniform(-2, 2, 3)),
                        tuple(random_hermitian(rng, 4) for _ in range(3)))
        h, rho = random_hermitian(rng, 4), random_state(rng, 4)
        assert abs(ctoc_direct(spec, h, rho) - ctoc_via_expansion(spec, h, rho)) < 1e-12


def test_route_deviation_helper():
    assert route_deviation(instances=200, seed=3) <= 1e-10


# --- invariants -------------------------------------------------------------

def test_basis_invariance(rng):
    for _ in range(25):
        dim = int(rng.choice([4, 8]))
        n = int(rng.integers(1, 5))
        h, rho = random_hermitian(rng, dim), random_state(rng, dim)
        ops = [random_hermitian(rng, dim) for _ in range(n)]
        u = random_unitary(rng, dim)
        rot = lambda m: u @ m @ u.conj().T
        times = np.sort(rng.uniform(-5, 5, n))
        sigma = random_sigma(rng, n)
        w = wightman(WightmanSpec(sigma, times, tuple(ops)), h, rho)
        w_rot = wightman(WightmanSpec(sigma, times, tuple(rot(b) for b in ops)), rot(h), rot(rho))
        assert abs(w - w_rot) <= 1e-10


@pytest.mark.parametrize("tau", [1.3, -1.3, 7.7, -7.7])
def test_stationary_shift_invariance(rng, tau):
    for _ in range(10):
        dim = int(rng.choice([4, 8]))
        n = int(rng.integers(1, 5))
        h = QuantumOperator(random_hermitian(rng, dim), hermitian=True)
        rho = thermal_state(h, float(rng.uniform(0.1, 3)))
        ops = tuple(random_hermitian(rng, dim) for _ in range(n))
        times = np.sort(rng.uniform(-5, 5, n))
        sigma = random_sigma(rng, n)
        engine = CorrelationEngine(h, rho)
        a = engine.wightman(WightmanSpec(sigma, times, ops))
        b = engine.wightman(WightmanSpec(sigma, times + tau, ops))
        assert abs(a - b) <= 1e-9


# --- sweeps -----------------------------------------------------------------

def test_empty_sweep_echoes_grid():
    res = sweep([], 2, [0.1, 0.2], Z, I2)
    assert res.series == {}
    np.testing.assert_array_equal(res.grid, [0.1, 0.2])


def test_sweep_matches_closed_form():
    grid = np.linspace(0.05, 3.0, 20)
    res = sweep([CtocSpec("++", (0.0, 1.0), Z)], 2, grid, X, I2)
    np.testing.assert_allclose(res.series["C:++"], np.cos(2 * grid), atol=1e-13)
    assert len(res.series["C:++"]) == len(grid)


def test_sweep_rejects_order_violation():
    with pytest.raises(ValueError, match="t2"):
        sweep([CtocSpec("++", (1.0, 2.0), Z)], 2, [0.5, 1.5], X, I2)


def test_sweep_rejects_bad_grid():
    with pytest.raises(ValueError):
        sweep([CtocSpec("++", (0.0, 1.0), Z)], 2, [0.5, 0.4], X, I2)


def test_sweep_rejects_duplicate_names():
    spec = CtocSpec("++", (0.0, 1.0), Z)
    with pytest.raises(ValueError):
        sweep([spec, spec], 2, [0.5], X, I2)


def test_sweep_custom_times():
    tpl = SweepTemplate(WightmanSpec((1, 2), (0.0, 1.0), X), name="shifted",
                        times_at=lambda t: (t - 1.0, t))
    res = sweep([tpl], 2, [0.5, 2.0], Z, UP)
    np.testing.assert_allclose(res.series["shifted"], np.exp(2j) * np.ones(2), atol=1e-13)


def test_sweep_outputs_round_trip():
    res = sweep([WightmanSpec((2, 1), (0.0, 1.0), X), CtocSpec("+-", (0.0, 1.0), X)],
                2, [0.25, 1.0 / 3.0], Z, UP)
    text = res.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["t2", "W:12.re", "W:12.im", "C:+-"]
    assert float(rows[2][0]) == 1.0 / 3.0              # 17 significant digits round-trip
    back = json.loads(res.to_json())
    assert list(back) == ["axis", "grid", "series"]
    assert back["series"]["W:12"]["im"][1] == res.series["W:12"].imag[1]
