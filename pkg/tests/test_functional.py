"""Space-time norms, the quotient, the six-linear form, and the E-L map."""

import numpy as np
import pytest

from qs4.errors import TailTestError, ValidationError
from qs4.functional import (
    PAD_FACTOR,
    TimeWindow,
    el_map,
    q_form,
    spacetime_norm,
    strichartz_quotient,
)
from qs4.grid import Field, dft_forward, inner_product, make_gaussian, make_grid, make_random_field
from qs4.propagator import evolve_quartic


def _window():
    return TimeWindow(2.0, 33)


def _bump(g, seed):
    return make_random_field(g, seed, band_radius=0.4 * g.nyquist,
                             envelope_width=g.extent / 10)


class TestTimeWindow:
    def test_nodes_and_weights(self):
        w = TimeWindow(2.0, 5)
        assert np.allclose(w.nodes, [-2, -1, 0, 1, 2])
        assert np.allclose(w.weights, [0.5, 1, 1, 1, 0.5])
        assert np.isclose(w.weights.sum(), 4.0)

    def test_refined_keeps_endpoints(self):
        w = TimeWindow(2.0, 9).refined(2)
        assert w.n_t == 17
        assert w.t_max == 2.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            TimeWindow(-1.0, 9)
        with pytest.raises(ValidationError):
            TimeWindow(1.0, 8)
        with pytest.raises(ValidationError):
            TimeWindow(1.0, 1)


class TestSpacetimeNorm:
    def test_matches_direct_quadrature(self):
        # unpadded per-node sums agree because the product of band-limited
        # factors is exactly represented once the band is narrow enough
        g = make_grid(128, 32.0)
        f = make_gaussian(g, width=0.8)
        w = _window()
        direct = 0.0
        for t, wt in zip(w.nodes, w.weights):
            u = evolve_quartic(f, t)
            direct += wt * np.sum(np.abs(u.values) ** 6) * g.spacing ** 2
        assert np.isclose(spacetime_norm(f, 6, 0.0, w) ** 6, direct, rtol=1e-12)

    def test_rejects_bad_exponent(self):
        g = make_grid(32, 8.0)
        with pytest.raises(ValidationError):
            spacetime_norm(make_gaussian(g, width=0.5), 5, 0.0, _window())

    def test_tail_gate_trips_on_small_torus(self):
        # on a small torus the dispersed wave wraps around and the endpoint
        # slices never become negligible
        g = make_grid(64, 16.0)
        f = make_gaussian(g, width=0.8)
        with pytest.raises(TailTestError):
            spacetime_norm(f, 6, 0.0, TimeWindow(3.0, 49))

    def test_time_reversal_symmetry(self):
        # real data evolve conjugate-symmetrically, so the norm over [-T, T]
        # equals twice the half-window sum minus the t = 0 slice
        g = make_grid(128, 32.0)
        f = make_gaussian(g, width=0.8)
        w = _window()
        total = 0.0
        for t, wt in zip(w.nodes, w.weights):
            u = evolve_quartic(f, t)
            total += wt * np.sum(np.abs(u.values) ** 6) * g.spacing ** 2
        mirrored = 0.0
        for t, wt in zip(-w.nodes[::-1], w.weights[::-1]):
            u = evolve_quartic(f, t)
            mirrored += wt * np.sum(np.abs(u.values) ** 6) * g.spacing ** 2
        assert np.isclose(total, mirrored, rtol=1e-12)


class TestQuotient:
    def test_scale_free_in_amplitude(self):
        g = make_grid(128, 32.0)
        f = make_gaussian(g, width=0.8)
        w = _window()
        q1 = strichartz_quotient(f, w).quotient
        q2 = strichartz_quotient(3.7 * f, w).quotient
        assert np.isclose(q1, q2, rtol=1e-12)

    def test_phase_invariance(self):
        g = make_grid(128, 32.0)
        f = make_gaussian(g, width=0.8)
        w = _window()
        q1 = strichartz_quotient(f, w).quotient
        q2 = strichartz_quotient(np.exp(1j * 0.7) * f, w).quotient
        assert np.isclose(q1, q2, rtol=1e-12)

    def test_zero_field_rejected(self):
        g = make_grid(32, 8.0)
        with pytest.raises(ValidationError):
            strichartz_quotient(Field(g, np.zeros((32, 32))), _window())


class TestQForm:
    def test_diagonal_equals_sixth_power(self):
        g = make_grid(128, 32.0)
        f = make_gaussian(g, width=0.8)
        w = _window()
        q6 = q_form(f, f, f, f, f, f, w)
        n6 = spacetime_norm(f, 6, 0.0, w) ** 6
        assert abs(q6 - n6) / n6 < 1e-12

    def test_linearity_first_slot(self):
        g = make_grid(32, 8.0)
        w = _window()
        f = _bump(g, 0)
        a = _bump(g, 1)
        b = _bump(g, 2)
        lhs = q_form(a + b, f, f, f, f, f, w)
        rhs = q_form(a, f, f, f, f, f, w) + q_form(b, f, f, f, f, f, w)
        assert abs(lhs - np.conj(rhs)) / abs(lhs) < 1e-10 or abs(lhs - rhs) / abs(lhs) < 1e-10

    def test_grid_mismatch_rejected(self):
        f = make_gaussian(make_grid(32, 8.0), width=0.5)
        h = make_gaussian(make_grid(64, 8.0), width=0.5)
        with pytest.raises(ValidationError):
            q_form(f, h, f, f, f, f, _window())


class TestElMap:
    def test_pairing_identity(self):
        # <g, Lambda(f)> = Q(g, f, f, f, f, f) for random g
        g = make_grid(128, 32.0)
        w = _window()
        f = make_gaussian(g, width=0.8)
        lam = el_map(f, w)
        for seed in range(3):
            probe = _bump(g, 10 + seed)
            lhs = inner_product(probe, lam)
            rhs = q_form(probe, f, f, f, f, f, w)
            assert abs(lhs - rhs) / abs(rhs) < 1e-10

    def test_omega_equals_sixth_power(self):
        # random speckle fields equilibrate on the torus instead of decaying,
        # so the time step must be fine enough for the endpoint slices to
        # stay below the tail gate
        g = make_grid(128, 32.0)
        w = TimeWindow(2.0, 257)
        for seed in range(3):
            f = make_random_field(g, seed, band_radius=1.5, envelope_width=4.0)
            lam = el_map(f, w)
            omega = inner_product(f, lam).real
            n6 = spacetime_norm(f, 6, 0.0, w) ** 6
            assert abs(omega - n6) / n6 < 1e-8

    def test_real_fast_path_matches_complex_path(self):
        g = make_grid(128, 32.0)
        w = _window()
        f = make_gaussian(g, width=0.8)
        real_path = el_map(f, w)
        # nudge into the complex branch with a negligible imaginary part
        f_c = Field(g, f.values + 1e-10j * f.values)
        complex_path = el_map(f_c, w)
        assert np.max(np.abs(real_path.values - complex_path.values)) < 1e-8

    def test_zero_field_rejected(self):
        g = make_grid(32, 8.0)
        with pytest.raises(ValidationError):
            el_map(Field(g, np.zeros((32, 32))), _window())


class TestPadding:
    def test_pad_factor_covers_quintic(self):
        assert PAD_FACTOR >= 3
