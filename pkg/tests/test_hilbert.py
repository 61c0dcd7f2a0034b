import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wstate_lyapunov.hilbert import (SectorLeakage, annihilation, atomic_transition,
                                     build_space, creation, enumerate_sector,
                                     product_basis, reduce_to_sector)


@pytest.mark.parametrize("n_max, dim", [(1, 216), (2, 729)])
def test_full_dimension(n_max, dim):
    space = build_space(n_max, reduce=False)
    assert space.dim == space.total_dim == dim


def test_sector_matches_brute_force_enumeration():
    full = build_space(1, reduce=False)
    sector = build_space(1)
    oracle = enumerate_sector(full, 1)
    assert sector.dim == len(oracle) == 10
    listed = {full.index(*lv) for lv in oracle}
    assert listed == set(sector.sector_basis)


def test_sector_dimension_independent_of_cutoff():
    assert build_space(2).dim == build_space(1).dim == 10


def test_n_max_must_hold_a_photon():
    with pytest.raises(ValueError):
        build_space(0)


def test_index_is_little_endian():
    space = build_space(reduce=False)
    assert space.index("f", "g", "g", 0, 0, 0) == 1
    assert space.index("g", "f", "g", 0, 0, 0) == 3
    assert space.index("g", "g", "g", 0, 0, 1) == 3 ** 3 * 2 * 2
    for i, levels in product_basis(space):
        assert space.index(*levels) == i


def test_atomic_transition_maps_basis_states():
    space = build_space()
    sig = atomic_transition(space, 2, "e", "f").matrix
    out = sig @ space.ket("g", "f", "g", 0, 0, 0)
    assert np.allclose(out, space.ket("g", "e", "g", 0, 0, 0))
    assert np.allclose(sig @ space.ket("f", "g", "g", 0, 0, 0), 0)


def test_ladder_algebra_in_full_space():
    space = build_space(2, reduce=False)
    a = annihilation(space, "b").matrix
    ad = creation(space, "b").matrix
    assert np.allclose(ad, a.conj().T)
    n = ad @ a
    vac2 = space.ket("g", "g", "g", 0, 0, 2)
    assert np.allclose(n @ vac2, 2 * vac2)
    # [a, a^+] = 1 below the truncation edge
    comm = a @ ad - ad @ a
    low = space.ket("g", "g", "g", 0, 0, 1)
    assert np.allclose(comm @ low, low)


def test_raising_outside_sector_is_rejected():
    space = build_space()
    with pytest.raises(SectorLeakage):
        creation(space, "a1")
    with pytest.raises(SectorLeakage):
        atomic_transition(space, 1, "f", "g")  # g -> f adds one excitation


def test_ket_outside_sector_is_rejected():
    with pytest.raises(SectorLeakage):
        build_space().ket("f", "f", "g", 0, 0, 0)


def test_excitation_conserving_operator_reduces():
    space = build_space()
    full = space.full()
    op = full.embed("atom1", np.diag([0, 1, 1]).astype(complex))
    red = reduce_to_sector(op, space)
    assert red.shape == (10, 10)


@given(st.sampled_from(["atom1", "atom2", "atom3", "a1", "a2", "b"]),
       st.sampled_from(["atom1", "atom2", "atom3", "a1", "a2", "b"]))
@settings(max_examples=30, deadline=None)
def test_operators_on_different_factors_commute(x, y):
    space = build_space(reduce=False)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(space.factor(x).dim,) * 2)
    b = rng.normal(size=(space.factor(y).dim,) * 2)
    A, B = space.embed(x, a), space.embed(y, b)
    if x != y:
        assert np.allclose(A @ B, B @ A)
    else:
        assert np.allclose(A @ B, space.embed(x, a @ b))


def test_embedding_is_hermitian_preserving():
    space = build_space(reduce=False)
    h = np.array([[0, 1], [1, 0]], dtype=complex)
    m = space.embed("a2", h)
    assert np.allclose(m, m.conj().T)
