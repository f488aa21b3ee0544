import numpy as np
import pytest

from holoapprox import JetSection, canonical_formal_solution, tangent_space
from holoapprox.expr import EvalDomainError, UnknownIdentifierError
from holoapprox.jetmodel import DeformedCube, Dims, Grid, HolonomicPair, lift_phase
from holoapprox.numcore import jacobian
from holoapprox.relation import JetPoint, rha_member

from conftest import mountain_delta


def test_dims_validation():
    assert Dims(2, 1, 3).source == 4
    assert Dims(1, 2, 1).variables() == ["x1", "y", "z1", "z2"]
    for bad in [(0, 0, 1), (1, -1, 1), (1, 0, 0)]:
        with pytest.raises(ValueError):
            Dims(*bad)


def test_section_validation():
    with pytest.raises(ValueError):
        JetSection.from_strings(["x1", "x1"], [["0", "0"]], 1, 0, 1)
    with pytest.raises(ValueError):
        JetSection.from_strings(["x1"], [["0"]], 1, 0, 1)
    with pytest.raises(UnknownIdentifierError):
        JetSection.from_strings(["x2"], [["0", "0"]], 1, 0, 1)
    # evaluated on a sample of the thickened cube
    with pytest.raises(EvalDomainError):
        JetSection.from_strings(["sqrt(x1 - 0.5)"], [["0", "0"]], 1, 0, 1)


def test_canonical_formal_solution_mountain(mountain):
    state = canonical_formal_solution(mountain)
    for x in (0.0, 0.3, 1.0):
        assert state.value([x]) == [0.0, x]
        assert np.allclose(np.array(state.formal([x]), dtype=float), [[0.0], [0.0]])
    assert state.holonomic == frozenset()


def test_canonical_formal_solution_identity_block():
    sigma = JetSection.from_strings(
        ["x1 + y", "sin(x2)"], [["1", "0", "7"], ["0", "1", "7"]], m=2, k=0, n=2
    )
    state = canonical_formal_solution(sigma)
    assert state.value([0.0, 0.0]) == [0.0, 0.0, 0.0]
    formal = np.array(state.formal([0.4, 0.2]), dtype=float)
    assert np.allclose(formal, [[0, 0], [1, 0], [0, 1]])


@pytest.mark.parametrize("eps", [0.01, 0.5, 3.0])
def test_canonical_formal_solution_is_member(eps):
    sigma = JetSection.from_strings(
        ["x1 * x2", "cos(x1)"], [["x2", "x1", "y + 1"], ["1", "-x2", "2"]], m=2, k=0, n=2
    )
    state = canonical_formal_solution(sigma)
    for x in np.random.default_rng(0).uniform(0, 1, size=(20, 2)):
        vals = state.value(list(x))
        formal = np.array(state.formal(list(x)), dtype=float)
        p = JetPoint(x, vals[0], vals[1:], formal[0], formal[1:])
        res = rha_member(sigma, eps, p)
        assert res.member
        assert res.clauses["slope"] == eps and res.clauses["value"] == eps


def test_tangent_space_examples():
    flat = DeformedCube(lambda x: 0.0 * x[0], Dims(2, 1, 1))
    assert np.allclose(tangent_space(flat, [0.2, 0.3]), [[1, 0, 0, 0], [0, 1, 0, 0]])
    diag = DeformedCube(lambda x: x[0], Dims(1, 0, 1))
    assert np.allclose(tangent_space(diag, [0.7]), [[1, 1]])
    eps, N = 0.5, 6
    from holoapprox.numcore import cos

    mount = DeformedCube(lambda x: 2 * (1 - cos(2 * np.pi * N * x[0])) / (eps * np.pi * N), Dims(1, 0, 1))
    for x in (0.01, 0.3, 0.77):
        expected = 4 * np.sin(2 * np.pi * N * x) / eps
        assert np.allclose(tangent_space(mount, [x]), [[1, expected]], atol=1e-12)
        assert mount.point([x])[1] == pytest.approx(mountain_delta(x, eps, N))


def test_tangent_space_independent_and_horizontal():
    from holoapprox.numcore import sin

    cube = DeformedCube(lambda x: sin(x[0] * x[1]) + x[1] ** 2, Dims(2, 2, 1))
    basis = tangent_space(cube, [0.4, 0.9])
    assert np.linalg.matrix_rank(basis) == 2
    assert np.all(basis[:, 3:] == 0)


def test_lift_phase_keeps_derivative():
    def value(v, phases):
        T = lift_phase(7.0 * v[0], phases, 0)
        return [T]

    vals, jac = jacobian(lambda v: value(v, {0: np.array([0.25])}), [0.1])
    assert np.allclose(vals[0], 0.25)
    assert np.allclose(jac[0][0], 7.0)
    assert lift_phase(3.0, None, 0) == 3.0


def test_holonomic_pair_jet():
    from holoapprox.numcore import sin

    pair = HolonomicPair(lambda x, phases=None: [x[0] * x[1], sin(x[0])], Dims(2, 0, 1))
    delta, h, grad, dh = pair.jet([0.5, 2.0])
    assert delta == 1.0 and h[0] == pytest.approx(np.sin(0.5))
    assert np.allclose(np.array(grad, dtype=float), [2.0, 0.5])
    assert np.allclose(np.array(dh, dtype=float), [[np.cos(0.5), 0.0]])


def test_grid_cube_and_split():
    g = Grid.cube(2, 5, lifted=(1,), phase_resolution=3)
    assert g.shape == (5, 5, 3)
    assert g.spacing == (0.25, 0.25, 0.5)
    x, phases, rest = g.split()
    assert len(x) == 2 and set(phases) == {1} and rest == []
    assert x[0].size == 75
    assert g.point(74) == [1.0, 1.0, 1.0]
    e = g.extend([np.array([-1.0, 1.0])])
    assert e.shape == (5, 5, 3, 2)
    _, _, rest = e.split()
    assert len(rest) == 1
    plain = Grid.cube(1, 3)
    assert plain.split()[1] is None
