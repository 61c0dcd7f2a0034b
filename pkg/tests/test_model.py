import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wstate_lyapunov.hilbert import build_space
from wstate_lyapunov.model import (DegenerateParams, ModelParams, NetworkModel,
                                   collapse_ops_emission, collapse_ops_modes,
                                   control_hamiltonians, dark_state, dark_state_overlap,
                                   feedback_unitary, hamiltonian_interaction, target_state,
                                   w_vector)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(eta=1.5)
    with pytest.raises(ValueError):
        ModelParams(gamma_atom=-0.1)


def test_hamiltonian_hermitian_and_consistent_with_full_space():
    p = ModelParams(delta=0.3, nu=0.7, omega2=0.2)
    sector = build_space()
    full = build_space(reduce=False)
    h_sec = hamiltonian_interaction(sector, p).matrix
    h_full = hamiltonian_interaction(full, p).matrix
    assert np.allclose(h_sec, h_sec.conj().T)
    idx = np.asarray(sector.sector_basis)
    assert np.allclose(h_full[np.ix_(idx, idx)], h_sec)


def test_hamiltonian_conserves_excitations():
    full = build_space(2, reduce=False)
    h = hamiltonian_interaction(full, ModelParams(delta=0.5)).matrix
    n = full.excitation_operator()
    assert np.abs(h @ n - n @ h).max() < 1e-12


def test_hamiltonian_matrix_elements():
    space = build_space()
    h = hamiltonian_interaction(space, ModelParams(g2=0.7, omega3=0.3, nu=0.5)).matrix
    k = space.ket
    el = lambda a, b: np.vdot(k(*a), h @ k(*b))  # noqa: E731
    assert el(("g", "e", "g", 0, 0, 0), ("g", "g", "g", 0, 1, 0)) == pytest.approx(0.7)
    assert el(("g", "g", "e", 0, 0, 0), ("g", "g", "f", 0, 0, 0)) == pytest.approx(-0.3)
    assert el(("e", "g", "g", 0, 0, 0), ("f", "g", "g", 0, 0, 0)) == pytest.approx(0.1)
    assert el(("g", "g", "g", 0, 0, 1), ("g", "g", "g", 1, 0, 0)) == pytest.approx(0.5)


def test_control_hamiltonians():
    space = build_space()
    hs = control_hamiltonians(space)
    assert len(hs) == 3
    for k, h in enumerate(hs):
        m = h.matrix
        assert np.allclose(m, m.conj().T)
        levels = ["g", "g", "g"]
        levels[k] = "f"
        up = ["g", "g", "g"]
        up[k] = "e"
        assert np.vdot(space.ket(*up, 0, 0, 0), m @ space.ket(*levels, 0, 0, 0)) == 1


@pytest.mark.parametrize("omega", [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0])
def test_dark_state_is_annihilated(omega):
    p = ModelParams.uniform(omega=omega)
    space = build_space()
    _, vec = dark_state(p, space)
    h = hamiltonian_interaction(space, p).matrix
    assert np.linalg.norm(h @ vec) <= 1e-10
    assert np.linalg.norm(vec) == pytest.approx(1.0)


@given(st.lists(st.floats(0.1, 3.0), min_size=6, max_size=6), st.floats(0.1, 2.0))
@settings(max_examples=50, deadline=None)
def test_dark_state_annihilated_for_unequal_couplings(vals, nu):
    g1, g2, g3, o1, o2, o3 = vals
    p = ModelParams(g1=g1, g2=g2, g3=g3, omega1=o1, omega2=o2, omega3=o3, nu=nu)
    space = build_space()
    _, vec = dark_state(p, space)
    assert np.linalg.norm(hamiltonian_interaction(space, p).matrix @ vec) <= 1e-10


def test_dark_state_coefficients_unit_parameters():
    ds, _ = dark_state(ModelParams.uniform(g=1.0, omega=1.0))
    c = 1 / np.sqrt(5)
    assert np.allclose(ds.coefficients, [c, c, c, -c, c])
    assert ds.norm == pytest.approx(5.0)


def test_dark_state_degenerate():
    with pytest.raises(DegenerateParams):
        dark_state(ModelParams.uniform(omega=0.0))


def test_dark_state_is_null_vector_from_eigendecomposition():
    # independent oracle: the zero-energy eigenspace of H intersected with the
    # component reachable from |f,g,g> has the dark state in it
    p = ModelParams()
    space = build_space()
    h = hamiltonian_interaction(space, p).matrix
    w, v = np.linalg.eigh(h)
    null = v[:, np.abs(w) < 1e-9]
    _, vec = dark_state(p, space)
    proj = null @ (null.conj().T @ vec)
    assert np.linalg.norm(proj - vec) < 1e-9


@pytest.mark.parametrize("x", [0.05, 0.1, 0.2, 1.0])
def test_overlap_formula_matches_vector(x):
    _, vec = dark_state(ModelParams.uniform(omega=x))
    w = w_vector(build_space())
    assert abs(np.vdot(w, vec)) ** 2 == pytest.approx(dark_state_overlap(x), abs=1e-12)


def test_overlap_value_at_default_drive():
    assert dark_state_overlap(0.1) == pytest.approx(0.99338, abs=1e-5)


def test_target_state_is_pure_projector():
    rho = target_state(build_space())
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(rho @ rho, rho)
    assert np.allclose(rho, rho.conj().T)


def test_emission_operators():
    space = build_space()
    ops = collapse_ops_emission(space, ModelParams(gamma_atom=0.2))
    assert len(ops) == 6
    assert all(rate == 0.2 for _, rate in ops)
    c, _ = ops[0]  # |g1><e1|
    e1 = space.ket("e", "g", "g", 0, 0, 0)
    assert np.allclose(c.matrix @ e1, space.ket("g", "g", "g", 0, 0, 0))
    # each of the two decay channels of one atom contributes |e><e|
    proj = sum(op.matrix.conj().T @ op.matrix for op, _ in ops[:2])
    assert np.allclose(proj @ e1, 2 * e1)


def test_mode_operators_count_photons():
    space = build_space()
    ops = collapse_ops_modes(space, ModelParams(gamma_mode=0.1))
    n = sum(c.matrix.conj().T @ c.matrix for c, _ in ops)
    one = space.ket("g", "g", "g", 0, 1, 0)
    assert np.allclose(n @ one, one)
    assert np.allclose(n @ space.ket("f", "g", "g", 0, 0, 0), 0)


def test_feedback_unitary_swaps_g_and_f_of_atom_one():
    space = build_space()
    F = feedback_unitary(space)
    full = space.full()
    assert np.allclose(F @ F.conj().T, np.eye(full.total_dim))
    g = np.zeros(full.total_dim)
    g[full.index("g", "g", "g", 0, 0, 0)] = 1
    out = F @ g
    assert abs(out[full.index("f", "g", "g", 0, 0, 0)]) == pytest.approx(1.0)


def test_feedback_jump_restores_atom_one():
    model = NetworkModel.build(ModelParams(gamma_mode=0.1))
    s = model.space
    j = model.feedback[0][0]  # F a1
    out = j @ s.ket("g", "g", "g", 1, 0, 0)
    assert abs(np.vdot(s.ket("f", "g", "g", 0, 0, 0), out)) == pytest.approx(1.0)


def test_network_model_initial_state():
    model = NetworkModel.build(ModelParams())
    rho = model.initial_state()
    assert np.trace(model.rho_target @ rho).real == pytest.approx(1 / 3)
