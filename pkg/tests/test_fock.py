import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fwmhom.fock import (
    BeamSplitter,
    NormalizationError,
    PureState,
    TruncationError,
    apply_beamsplitter,
    beamsplitter_amplitudes,
    expectation,
    fock_state,
    output_distribution,
    projection_probability,
    superposition,
    tensor,
)


def sympy_amplitudes(n, m, t, r):
    """Expand the creation-operator polynomial symbolically; independent of the closed form."""
    a3, a4 = sp.symbols("a3 a4")
    t, r = sp.Float(t, 30), sp.Float(r, 30)
    poly = sp.expand((t * a3 + sp.I * r * a4) ** n * (sp.I * r * a3 + t * a4) ** m)
    out = {}
    for (p3, p4), coef in sp.Poly(poly, a3, a4).terms():
        amp = coef * sp.sqrt(sp.factorial(p3) * sp.factorial(p4) / (sp.factorial(n) * sp.factorial(m)))
        out[(p3, p4)] = complex(sp.N(amp, 30))
    return out


def assert_amplitudes_match(got, want, tol=1e-12):
    keys = set(got) | set(want)
    for k in keys:
        assert abs(got.get(k, 0) - want.get(k, 0)) <= tol, k


class TestBeamSplitter:
    def test_balanced(self):
        bs = BeamSplitter.balanced()
        assert bs.t == pytest.approx(1 / math.sqrt(2))
        assert bs.transmittance + bs.reflectance == pytest.approx(1.0, abs=1e-15)

    def test_rejects_lossy(self):
        with pytest.raises(ValueError):
            BeamSplitter(0.8, 0.8)

    def test_from_coefficients_accepts_split_ratios_and_amplitudes(self):
        ratios = BeamSplitter.from_coefficients(0.54, 0.46)
        assert ratios.transmittance == pytest.approx(0.54)
        amps = BeamSplitter.from_coefficients(math.sqrt(0.54), math.sqrt(0.46))
        assert amps.t == pytest.approx(ratios.t)

    def test_matrix_unitary(self):
        u = BeamSplitter.from_transmittance(0.3).matrix()
        assert np.allclose(u @ u.conj().T, np.eye(2))


class TestAmplitudes:
    def test_two_two_against_symbolic_expansion(self):
        bs = BeamSplitter.balanced()
        got = beamsplitter_amplitudes(2, 2, bs.t, bs.r)
        assert_amplitudes_match(got, sympy_amplitudes(2, 2, bs.t, bs.r))
        # |2,2> -> sqrt(3/8)(|4,0> + |0,4>) - 1/2 |2,2>
        assert abs(got[(4, 0)]) == pytest.approx(math.sqrt(3 / 8))
        assert got[(2, 2)] == pytest.approx(-0.5)

    @pytest.mark.parametrize("n,m", [(0, 3), (1, 2), (3, 1), (2, 3), (4, 4)])
    @pytest.mark.parametrize("T", [0.5, 0.54, 0.9])
    def test_general_against_symbolic_expansion(self, n, m, T):
        bs = BeamSplitter.from_transmittance(T)
        got = beamsplitter_amplitudes(n, m, bs.t, bs.r)
        assert_amplitudes_match(got, sympy_amplitudes(n, m, bs.t, bs.r))

    def test_single_photon_coefficients(self):
        bs = BeamSplitter.from_transmittance(0.54)
        amp = beamsplitter_amplitudes(1, 1, bs.t, bs.r)
        assert amp[(1, 1)] == pytest.approx(bs.t**2 - bs.r**2)
        assert amp[(2, 0)] == pytest.approx(1j * bs.r * bs.t * math.sqrt(2))
        assert amp[(0, 2)] == pytest.approx(1j * bs.r * bs.t * math.sqrt(2))

    def test_hom_zero(self):
        bs = BeamSplitter.balanced()
        assert abs(beamsplitter_amplitudes(1, 1, bs.t, bs.r).get((1, 1), 0)) <= 1e-15

    @given(
        n=st.integers(0, 6),
        m=st.integers(0, 6),
        T=st.floats(0.0, 1.0, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_unitarity_and_conservation(self, n, m, T):
        bs = BeamSplitter.from_transmittance(T)
        amps = beamsplitter_amplitudes(n, m, bs.t, bs.r)
        assert all(n3 + n4 == n + m for n3, n4 in amps)
        assert sum(abs(a) ** 2 for a in amps.values()) == pytest.approx(1.0, abs=1e-12)
        assert output_distribution(n, m, bs).sum() == pytest.approx(1.0, abs=1e-12)


class TestStates:
    def test_apply_preserves_norm_and_photon_number(self):
        bs = BeamSplitter.from_transmittance(0.3)
        state = superposition({(1, 1, 0): 1.0, (2, 0, 1): 0.5j, (0, 0, 0): 0.2}, n_max=4)
        out = apply_beamsplitter(state, 0, 1, bs)
        assert out.is_normalized()
        assert out.photon_numbers() == state.photon_numbers()
        assert all(occ[2] == 0 for occ, amp in out.terms.items() if sum(occ) == 2)

    def test_four_balanced_passes_give_parity(self):
        # a 50:50 splitter applied four times equals -1 on each photon
        bs = BeamSplitter.balanced()
        state = superposition({(2, 1): 0.6, (1, 0): 0.8}, n_max=3)
        out = state
        for _ in range(4):
            out = apply_beamsplitter(out, 0, 1, bs)
        for occ, amp in state.terms.items():
            assert out.amplitude(occ) == pytest.approx((-1) ** sum(occ) * amp, abs=1e-12)

    def test_tensor_order_and_truncation(self):
        s = tensor(fock_state([1, 0]), fock_state([2]), n_max=3)
        assert s.terms == {(1, 0, 2): 1.0}
        with pytest.raises(TruncationError):
            tensor(fock_state([2]), fock_state([2]), n_max=3)

    def test_occupation_bounds(self):
        with pytest.raises(TruncationError):
            fock_state([5], n_max=4)
        with pytest.raises(ValueError):
            PureState({(1,): 1.0}, 2)

    def test_zero_state_cannot_normalize(self):
        with pytest.raises(NormalizationError):
            PureState({}, 1).normalized()

    def test_expectation_requires_normalized(self):
        s = PureState({(1, 0): 2.0}, 2)
        with pytest.raises(NormalizationError):
            expectation(s, lambda occ: occ[0])
        assert expectation(s.normalized(), lambda occ: occ[0]) == pytest.approx(1.0)

    def test_projection_hom(self):
        out = apply_beamsplitter(fock_state([1, 1]), 0, 1, BeamSplitter.balanced())
        assert projection_probability(out, lambda occ: occ == (1, 1)) <= 1e-24
        assert projection_probability(out, lambda occ: occ == (2, 0)) == pytest.approx(0.5)
