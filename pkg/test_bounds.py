import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from conftest import SWEEP_GRID, amplitude_damping, maser_bundle_at, random_matrix, three_cycle, two_state_chain
from modules.core import (
    CountingVector, JumpOperator, NumericalConsistencyError, OpenSystem,
    QuantumModelError, StationaryStateError, inner_product_s, norm_s, unvectorize,
)
from modules.bounds import (
    BoundReport, check_eps_response, check_iur, check_iur_variance, check_kur_response,
    check_power_efficiency, check_rkur, check_sandwich, check_tkur, check_tkur_classical_form,
    delta_phi, engine_point, iur_components, phi_inverse, response_gradient, scan_engine_regime,
    symmetrized_gap, tkur_bound, tkur_coefficients,
)
from modules.liouvillian import LiouvillianBundle, counting_for
from modules.models import (
    MaserParams, bath_temperature, classical_engine,
    classical_heat_vectors, cycle_current, embed_classical, maser_heat_vectors, random_chain,
)
from modules.statistics import channel_traffic, mean_observable


def edge_current(channel_map, values):
    """對每對 (m, n), m < n 指定權重，反向取負"""
    weights = {}
    for (m, n), k in channel_map.items():
        weights[k] = values[(m, n)] if m < n else -values[(n, m)]
    return CountingVector(weights)


class TestPhi:
    def test_known_values(self):
        assert phi_inverse(0.0) == 0.0
        assert phi_inverse(np.tanh(1.0)) == pytest.approx(1.0, abs=1e-10)
        assert 100.0 <= phi_inverse(100.0) <= 100.0 + 1e-6

    @pytest.mark.parametrize('x', [0.01, 0.1, 1.0, 5.0, 50.0])
    def test_inverse_of_x_tanh_x(self, x):
        assert phi_inverse(x * np.tanh(x)) == pytest.approx(x, abs=1e-10)

    def test_negative_argument(self):
        with pytest.raises(ValueError):
            phi_inverse(-0.1)

    @seed(1)
    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1e3, allow_nan=False))
    def test_lower_envelope(self, y):
        assert phi_inverse(y) >= max(np.sqrt(y), y) * (1 - 1e-12)

    @seed(2)
    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=1e-4, max_value=1e2), st.floats(min_value=1e-3, max_value=1e2))
    def test_bound_dominates_weak_forms(self, sigma, activity):
        assert tkur_bound(sigma, activity) >= max(2 / sigma, 1 / activity) * (1 - 1e-9)

    def test_equilibrium_limit(self):
        assert tkur_bound(0.0, 4.0) == pytest.approx(0.25)


class TestTkurCoefficients:
    def test_equilibrium_chain(self):
        system, _ = embed_classical(two_state_chain(1.0, 3.0))
        coefficients = tkur_coefficients(LiouvillianBundle(system))
        assert all(abs(v) < 1e-12 for v in coefficients.values())

    def test_antisymmetric_on_maser(self):
        bundle = maser_bundle_at(1.0)
        coefficients = tkur_coefficients(bundle)
        for k, k_star, _ in bundle.system.pairing.pairs:
            assert coefficients[k] == pytest.approx(-coefficients[k_star])
            assert -1.0 <= coefficients[k] <= 1.0

    def test_one_way_limit(self):
        system, channel_map = embed_classical(three_cycle(1.0, 1e-30))
        coefficients = tkur_coefficients(LiouvillianBundle(system))
        forward = channel_map[(1, 0)]
        assert coefficients[forward] == pytest.approx(1.0)

    def test_requires_pairing(self):
        with pytest.raises(QuantumModelError):
            tkur_coefficients(LiouvillianBundle(amplitude_damping(drive=1.0)))


class TestDeltaPhi:
    def test_vanishes_for_classical_chains(self, rng):
        for dim in (3, 4):
            system, channel_map = embed_classical(random_chain(dim, rng))
            bundle = LiouvillianBundle(system)
            pairs = {(m, n): rng.normal() for (m, n) in channel_map if m < n}
            counting = edge_current(channel_map, pairs)
            assert abs(delta_phi(bundle, counting, 3.0)) < 1e-10
            assert abs(delta_phi(bundle, counting, mode='asymptotic')) < 1e-10

    def test_finite_tau_converges_to_asymptotic(self, maser_bundle, maser_current):
        limit = delta_phi(maser_bundle, maser_current, mode='asymptotic')
        near = delta_phi(maser_bundle, maser_current, 100.0)
        far = delta_phi(maser_bundle, maser_current, 1000.0)
        assert abs(far - limit) <= 0.2 * abs(near - limit) + 1e-12

    def test_resonant_maser_enhances_response(self):
        bundle = maser_bundle_at(0.0)
        value = delta_phi(bundle, cycle_current(bundle.system), 10.0)
        assert abs(1 + value) < 1

    def test_requires_current(self, maser_bundle):
        with pytest.raises(QuantumModelError):
            delta_phi(maser_bundle, counting_for(maser_bundle, [1, 1, 1, 1]), 10.0)

    def test_zero_mean_current(self):
        system, channel_map = embed_classical(two_state_chain(1.0, 3.0))
        counting = edge_current(channel_map, {(0, 1): 1.0})
        with pytest.raises(ValueError, match="zero mean"):
            delta_phi(LiouvillianBundle(system), counting, 1.0)


class TestTkur:
    @pytest.mark.parametrize('delta', SWEEP_GRID)
    def test_holds_on_maser(self, delta):
        bundle = maser_bundle_at(delta)
        report = check_tkur(bundle, cycle_current(bundle.system), 10.0)
        assert report.applicable
        assert report.satisfied
        assert report.components['F'] > 0

    def test_classical_form_fails_at_resonance(self):
        bundle = maser_bundle_at(0.0)
        report = check_tkur_classical_form(bundle, cycle_current(bundle.system), 10.0)
        assert not report.certified
        assert not report.satisfied

    def test_classical_chain_satisfies_both(self, rng):
        system, channel_map = embed_classical(random_chain(4, rng))
        bundle = LiouvillianBundle(system)
        counting = edge_current(channel_map, {(m, n): 1.0 for (m, n) in channel_map if m < n})
        if abs(mean_observable(bundle, counting, 1.0)) < 1e-6:
            pytest.skip("mean current vanishes for this draw")
        assert check_tkur(bundle, counting, 5.0).satisfied
        assert check_tkur_classical_form(bundle, counting, 5.0).satisfied

    def test_equilibrium_is_inapplicable(self):
        system, channel_map = embed_classical(two_state_chain(1.0, 3.0))
        counting = edge_current(channel_map, {(0, 1): 1.0})
        report = check_tkur(LiouvillianBundle(system), counting, 1.0)
        assert not report.applicable
        assert report.satisfied

    def test_corrupted_delta_fails(self, maser_bundle, maser_current):
        report = check_tkur(maser_bundle, maser_current, 10.0, delta_override=10.0)
        assert not report.satisfied


class TestSymmetrizedGap:
    def test_two_state_chain(self):
        system, _ = embed_classical(two_state_chain(0.7, 1.3))
        bundle = LiouvillianBundle(system)
        for s in (0.0, 0.5):
            assert symmetrized_gap(bundle, s).gap == pytest.approx(1.0, rel=1e-10)

    def test_rejects_other_s(self, maser_bundle):
        with pytest.raises(ValueError):
            symmetrized_gap(maser_bundle, 0.3)

    def test_rank_deficient(self):
        with pytest.raises(StationaryStateError):
            symmetrized_gap(LiouvillianBundle(amplitude_damping()), 0.5)

    @pytest.mark.parametrize('s', [0.0, 0.5])
    @pytest.mark.parametrize('delta', [0.0, 1.0, 2.0])
    def test_kernel_and_dissipativity(self, s, delta, rng):
        bundle = maser_bundle_at(delta)
        gap = symmetrized_gap(bundle, s)
        assert abs(gap.eigenvalues[0]) < 1e-9
        assert gap.gap > 0
        for _ in range(50):
            a = random_matrix(rng, 3)
            value = gap.quadratic_form(a)
            assert value.real <= 1e-12 * norm_s(a, bundle.pi, s) ** 2

    @pytest.mark.parametrize('s', [0.0, 0.5])
    @pytest.mark.parametrize('delta', [0.0, 1.0, 2.0])
    def test_variational_characterisation(self, s, delta, rng):
        bundle = maser_bundle_at(delta)
        gap = symmetrized_gap(bundle, s)
        pi = bundle.pi
        eye = np.eye(3)
        lowest = gap.eigenvalues[-1]
        for _ in range(30):
            a = random_matrix(rng, 3)
            a = a - inner_product_s(eye, a, pi, s) * eye
            ratio = gap.quadratic_form(a).real / inner_product_s(a, a, pi, s).real
            assert lowest - 1e-9 <= ratio <= -gap.gap + 1e-9
        mode = gap.slowest_mode()
        ratio = gap.quadratic_form(mode).real / inner_product_s(mode, mode, pi, s).real
        assert ratio == pytest.approx(-gap.gap, abs=1e-8)

    @pytest.mark.parametrize('s', [0.0, 0.5])
    @pytest.mark.parametrize('delta', [0.0, 1.0, 2.0])
    def test_heisenberg_decay(self, s, delta):
        import scipy.linalg as la
        from modules.statistics import counting_operators

        bundle = maser_bundle_at(delta)
        gap = symmetrized_gap(bundle, s)
        pi = bundle.pi
        j1, _, _ = counting_operators(bundle, cycle_current(bundle.system))
        j1_bar = j1 - np.trace(j1 @ pi) * np.eye(3)
        start = norm_s(j1_bar, pi, s)
        for t in (0.1, 0.5, 1.0, 2.0, 5.0):
            evolved = unvectorize(la.expm(bundle.adjoint.entries * t) @ j1_bar.reshape(-1))
            assert norm_s(evolved, pi, s) <= np.exp(-gap.gap * t) * start * (1 + 1e-10) + 1e-14


class TestIur:
    def test_components(self, maser_bundle):
        counting = counting_for(maser_bundle, [1, 0, 0, 0])
        traffic, _ = channel_traffic(maser_bundle)
        comps = iur_components(maser_bundle, counting, 0.5)
        assert comps.j2_mean == pytest.approx(traffic[1])
        assert comps.j1_mean == pytest.approx(traffic[1])

    def test_zero_counting(self, maser_bundle):
        with pytest.raises(ValueError, match="all-zero"):
            iur_components(maser_bundle, counting_for(maser_bundle, [0, 0, 0, 0]), 0.0)

    @pytest.mark.parametrize('delta', SWEEP_GRID)
    def test_holds_and_orders(self, delta):
        bundle = maser_bundle_at(delta)
        counting = cycle_current(bundle.system)
        symmetric = check_iur(bundle, counting, 10.0, 0.5)
        plain = check_iur(bundle, counting, 10.0, 0.0)
        assert symmetric.satisfied and plain.satisfied
        assert symmetric.rhs <= plain.rhs * (1 + 1e-9)

    @pytest.mark.parametrize('s', [0.0, 0.5])
    def test_variance_form(self, s, maser_bundle, maser_current):
        for tau in (0.1, 1.0, 10.0, 100.0):
            assert check_iur_variance(maser_bundle, maser_current, tau, s).satisfied

    def test_sandwich(self, maser_bundle, maser_current):
        report = check_sandwich(maser_bundle, maser_current, 10.0)
        assert report.satisfied
        assert report.components['tkur_rhs'] <= report.components['F'] / (1 + report.components['delta_phi']) ** 2


class TestResponse:
    def test_matches_finite_difference(self, maser_bundle, maser_current):
        gradient = response_gradient(maser_bundle, maser_current, 10.0)
        scale = max(abs(v) for v in gradient.values.values())
        for k, value in gradient.values.items():
            assert value == pytest.approx(gradient.finite_difference[k], abs=1e-6 * scale)

    def test_classical_gradient_sums_to_mean(self, rng):
        system, channel_map = embed_classical(random_chain(4, rng))
        bundle = LiouvillianBundle(system)
        counting = CountingVector({k: rng.normal() for k in channel_map.values()})
        gradient = response_gradient(bundle, counting, 5.0)
        assert gradient.total == pytest.approx(gradient.mean, rel=1e-8)

    def test_dead_channel_has_zero_gradient(self):
        base = amplitude_damping(drive=1.0)
        dead = JumpOperator(np.zeros((2, 2)), 2)
        system = OpenSystem(base.hamiltonian, base.jumps + (dead,))
        bundle = LiouvillianBundle(system)
        gradient = response_gradient(bundle, CountingVector({1: 1.0, 2: 1.0}), 3.0)
        assert gradient.values[2] == 0.0

    @pytest.mark.parametrize('delta', [0.0, 1.0, 2.0])
    def test_rkur_random_counting(self, delta):
        bundle = maser_bundle_at(delta)
        rng = np.random.default_rng(int(delta * 10))
        for _ in range(10):
            counting = counting_for(bundle, rng.uniform(-1, 1, size=4))
            report = check_rkur(bundle, counting, 10.0)
            assert report.satisfied

    def test_rkur_zero_counting(self, maser_bundle):
        report = check_rkur(maser_bundle, counting_for(maser_bundle, [0, 0, 0, 0]), 10.0)
        assert report.lhs == 0.0
        assert report.satisfied

    def test_classical_activity_implies_kur(self, rng):
        system, _ = embed_classical(random_chain(3, rng))
        bundle = LiouvillianBundle(system)
        counting = CountingVector({k: 1.0 for k in system.channel_ids})
        rkur = check_rkur(bundle, counting, 4.0)
        kur = check_kur_response(bundle, counting, 4.0)
        assert rkur.lhs >= kur.lhs * (1 - 1e-8)
        assert kur.satisfied

    def test_eps_response(self, maser_bundle, maser_current):
        gradient = response_gradient(maser_bundle, maser_current, 10.0)
        uniform = check_eps_response(maser_bundle, maser_current, 10.0, {k: 1.0 for k in range(1, 5)},
                                     claimed_response=gradient.total)
        assert uniform.satisfied
        alternating = check_eps_response(maser_bundle, maser_current, 10.0, {1: 1, 2: -1, 3: 1, 4: -1})
        assert alternating.satisfied
        frozen = check_eps_response(maser_bundle, maser_current, 10.0, {})
        assert frozen.lhs == 0.0

    def test_eps_response_inconsistent_claim(self, maser_bundle, maser_current):
        with pytest.raises(ValueError):
            check_eps_response(maser_bundle, maser_current, 10.0, {}, claimed_response=1.0)
        with pytest.raises(NumericalConsistencyError):
            check_eps_response(maser_bundle, maser_current, 10.0, {1: 1.0}, claimed_response=123.0)


class TestPowerEfficiency:
    def test_classical_engine(self):
        chain, temp_h, temp_c, (omega_h, omega_c) = classical_engine()
        system, channel_map = embed_classical(chain)
        bundle = LiouvillianBundle(system)
        hot, cold = classical_heat_vectors(channel_map, omega_h, omega_c)
        report = check_power_efficiency(bundle, hot, cold, temp_h, temp_c, 10.0)
        assert report.applicable
        assert report.satisfied
        assert abs(report.components['delta_p']) < 1e-10
        assert report.components['efficiency'] == pytest.approx(0.5)

    def test_maser_engine(self):
        params = MaserParams()
        omega_h, omega_c = 1.0, 0.5
        temp_h = bath_temperature(omega_h, params.n_h)
        temp_c = bath_temperature(omega_c, params.n_c)
        bundle = maser_bundle_at(1.0)
        hot, cold = maser_heat_vectors(omega_h, omega_c)
        report = check_power_efficiency(bundle, hot, cold, temp_h, temp_c, 10.0)
        assert report.applicable
        assert report.satisfied
        assert report.components['carnot'] == pytest.approx(1 - temp_c / temp_h)

    def test_refrigerator_is_inapplicable(self):
        params = MaserParams()
        omega_h, omega_c = 0.5, 1.0
        hot, cold = maser_heat_vectors(omega_h, omega_c)
        bundle = maser_bundle_at(1.0)
        report = check_power_efficiency(bundle, hot, cold, bath_temperature(omega_h, params.n_h),
                                        bath_temperature(omega_c, params.n_c), 10.0)
        assert not report.applicable
        assert report.reason == 'not in engine regime'

    def test_inconsistent_temperatures(self):
        hot, cold = maser_heat_vectors(1.0, 0.5)
        with pytest.raises(QuantumModelError):
            check_power_efficiency(maser_bundle_at(1.0), hot, cold, 1.0, 0.1, 10.0)

    def test_scan(self):
        hot, cold = maser_heat_vectors(1.0, 0.5)
        points = [(delta, maser_bundle_at(delta)) for delta in SWEEP_GRID]
        rows = scan_engine_regime(points, hot, cold, 5.0, 0.1)
        assert len(rows) == len(SWEEP_GRID)
        for value, power, efficiency, regime in rows:
            assert efficiency == pytest.approx(0.5)
            assert regime == (power > 0)

    def test_engine_point(self):
        bundle = maser_bundle_at(1.0)
        hot, cold = maser_heat_vectors(1.0, 0.5)
        power, efficiency = engine_point(bundle, hot, cold)
        assert power > 0
        assert efficiency == pytest.approx(0.5)


class TestBoundReport:
    def test_unknown_name(self):
        with pytest.raises(ValueError):
            BoundReport(name='bogus', lhs=1.0, rhs=1.0)

    def test_non_finite_component(self):
        with pytest.raises(NumericalConsistencyError):
            BoundReport(name='tkur', lhs=1.0, rhs=1.0, components={'sigma': float('nan')})

    def test_slack_sign(self):
        assert BoundReport(name='tkur', lhs=2.0, rhs=1.0, kind='lower').slack == 1.0
        assert BoundReport(name='iur', lhs=2.0, rhs=1.0, kind='upper').slack == -1.0
        data = BoundReport.inapplicable('tkur', 'σ = 0').to_dict()
        assert data['reason'] == 'σ = 0'
        assert 'lhs' not in data
