"""
不等式模組 - 熱力學-動力學不確定性關係的數值驗證

提供：
- 量子 TKUR 及其古典形式
- 對稱化 Liouvillian 的譜隙與逆不確定性上界 (IUR)
- 響應梯度與響應 KUR、ε 響應推論
- 熱機功率-效率權衡
- 古典 TUR / KUR 報告與夾擠報告
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import scipy.linalg as la
from scipy.optimize import brentq

from config import Config
from modules.core import (
    NumericalConsistencyError, QuantumModelError, StationaryStateError,
    dagger, identity_vector, matrix_power_hermitian, norm_s, unvectorize, vectorize,
    weight_matrix, check_s,
)
from modules.liouvillian import SuperOperatorMatrix, build_perturbed_generator, integrated_propagators
from modules.statistics import (
    channel_traffic, counting_operators, entropy_production_rate, mean_observable,
    mean_tolerance, variance_exact, variance_rate_asymptotic,
)

# 設置日誌
logger = logging.getLogger(__name__)

BOUND_NAMES = (
    'tkur', 'tkur_classical_form', 'iur', 'iur_variance', 'rkur', 'eps_response',
    'power_efficiency', 'tur', 'kur', 'kur_response', 'sandwich',
)


@dataclass
class BoundReport:
    """單一不等式的兩側與中間量

    slack 已正規化：不論上界或下界，slack ≥ 0 代表成立。
    certified 為 False 的報告只是診斷（例如古典形式 TKUR 在量子系統可被違反）。
    """
    name: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    kind: str = 'lower'
    components: Dict[str, float] = field(default_factory=dict)
    applicable: bool = True
    certified: bool = True
    reason: str = ''
    tolerance: float = Config.BOUND_REL_TOL

    def __post_init__(self):
        if self.name not in BOUND_NAMES:
            raise ValueError(f"未知不等式名稱: {self.name}")
        if not self.applicable:
            return
        for key, value in self.components.items():
            if value is None or not np.isfinite(value):
                raise NumericalConsistencyError(f"{self.name}: 中間量 {key} 非有限 ({value})")
        if not (np.isfinite(self.lhs) and np.isfinite(self.rhs)):
            raise NumericalConsistencyError(f"{self.name}: 不等式兩側非有限")

    @classmethod
    def inapplicable(cls, name, reason, components=None):
        return cls(name=name, applicable=False, reason=reason, components=dict(components or {}))

    @property
    def slack(self):
        if not self.applicable:
            return None
        return self.lhs - self.rhs if self.kind == 'lower' else self.rhs - self.lhs

    @property
    def satisfied(self):
        if not self.applicable:
            return True
        return self.slack >= -self.tolerance * abs(self.rhs)

    def to_dict(self):
        data = {
            'name': self.name,
            'kind': self.kind,
            'applicable': self.applicable,
            'certified': self.certified,
        }
        if self.applicable:
            data.update({'lhs': float(self.lhs), 'rhs': float(self.rhs),
                         'slack': float(self.slack), 'satisfied': bool(self.satisfied)})
        else:
            data['reason'] = self.reason
        data['components'] = {k: float(v) for k, v in sorted(self.components.items())}
        return data


@dataclass
class GapData:
    s: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    weight: np.ndarray
    weight_sqrt: np.ndarray
    symmetrized: SuperOperatorMatrix

    @property
    def gap(self):
        return float(-self.eigenvalues[1])

    def quadratic_form(self, a):
        """⟨A, L̃_s(A)⟩_s"""
        v = vectorize(a)
        return complex(np.vdot(v, self.weight @ (self.symmetrized.entries @ v)))

    def slowest_mode(self):
        """λ₁ 對應的算子 A = unvec(W_s^{−1/2} r₁)，達成變分式的等號"""
        return unvectorize(la.solve(self.weight_sqrt, self.eigenvectors[:, 1]))


# ===== Φ 函數 =====

def phi_inverse(y):
    """x·tanh(x) 的反函數 Φ(y)，以 brentq 在 [max(√y, y), y + 1] 內求根"""
    y = float(y)
    if y < 0 or not np.isfinite(y):
        raise ValueError(f"Φ 需要有限的 y ≥ 0，得到 {y}")
    if y == 0.0:
        return 0.0
    low, high = max(np.sqrt(y), y), y + 1.0
    target = lambda x: x * np.tanh(x) - y
    if target(low) >= 0.0:
        return low
    return float(brentq(target, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def tkur_bound(sigma, activity):
    """(4a/σ²)·Φ(σ/2a)²；σ → 0 的極限為 1/a"""
    if sigma <= 0.0:
        return 1.0 / activity
    return 4 * activity / sigma ** 2 * phi_inverse(sigma / (2 * activity)) ** 2


# ===== 量子 TKUR =====

def tkur_coefficients(bundle):
    """ℓ_k = (t_k − t_{k*})/(t_k + t_{k*})"""
    pairing = bundle.system.pairing
    if pairing is None:
        raise QuantumModelError("σ undefined without local detailed balance")
    traffic, _ = channel_traffic(bundle)
    coefficients = {}
    for k, k_star, _ in pairing.pairs:
        if k == k_star:
            coefficients[k] = 0.0
            continue
        total = traffic[k] + traffic[k_star]
        if total <= 0.0:
            raise QuantumModelError(f"dead pair ({k}, {k_star}): 總流量為零")
        coefficients[k] = (traffic[k] - traffic[k_star]) / total
    return coefficients


def _require_current(bundle, counting):
    if not counting.is_current(bundle.system):
        raise QuantumModelError("計數向量不是 current (需要配對且 c_k = −c_k*)")


def delta_phi(bundle, counting, tau=None, mode='finite'):
    """量子修正 δ_φ = ⟨φ⟩_φ / ⟨φ⟩

    Args:
        mode: 'finite' 以 K₂(τ) 精確積分 φ_t；'asymptotic' 使用群逆

    Returns:
        float: δ_φ（古典極限下為 0）
    """
    _require_current(bundle, counting)
    if mode not in ('finite', 'asymptotic'):
        raise ValueError(f"未知模式: {mode}")

    c_hat = bundle.jump_superoperator(counting)
    row = bundle.identity_vec @ c_hat
    denominator = row @ bundle.pi_vec
    _, activity = channel_traffic(bundle)
    if abs(denominator) <= bundle.config.MEAN_TOL_FACTOR * max(activity, 1e-300):
        raise ValueError("zero mean current: δ_φ 未定義")

    source = bundle.learning_dissipator(tkur_coefficients(bundle)) @ bundle.pi_vec
    if mode == 'finite':
        if tau is None or tau <= 0:
            raise ValueError("有限 τ 模式需要 τ > 0")
        props = bundle.propagators(tau)
        phi_trace = bundle.identity_vec @ (props.K1 @ source)
        if abs(phi_trace) > 1e-10 * max(1.0, la.norm(source) * tau):
            raise NumericalConsistencyError(f"φ_τ 不是零跡: {phi_trace:.3e}")
        value = (row @ (props.K2 @ source)) / (tau * denominator)
    else:
        value = -(row @ bundle.group_inverse_apply(source)) / denominator

    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise NumericalConsistencyError(f"δ_φ 虛部過大: {value.imag:.3e}")
    return float(value.real)


def check_tkur(bundle, counting, tau, mode='finite', delta_override=None):
    """F_φ/(1+δ_φ)² ≥ (4a/σ²)Φ(σ/2a)²"""
    _require_current(bundle, counting)
    sigma = entropy_production_rate(bundle)
    _, activity = channel_traffic(bundle)
    if sigma <= 0.0:
        return BoundReport.inapplicable('tkur', 'σ = 0 (equilibrium)')
    mean = mean_observable(bundle, counting, tau)
    if abs(mean) <= mean_tolerance(bundle, tau):
        return BoundReport.inapplicable('tkur', 'zero mean current')

    variance = variance_exact(bundle, counting, tau)
    fluctuation = tau * variance / mean ** 2
    delta = delta_phi(bundle, counting, tau, mode) if delta_override is None else float(delta_override)
    rhs = tkur_bound(sigma, activity)
    return BoundReport(
        name='tkur', lhs=fluctuation / (1 + delta) ** 2, rhs=rhs, kind='lower',
        components={
            'sigma': sigma, 'activity': activity, 'delta_phi': delta,
            'phi_argument': sigma / (2 * activity), 'F': fluctuation,
            'mean': mean, 'variance': variance,
            'weak_bound': max(2 / sigma, 1 / activity),
        },
        tolerance=bundle.config.BOUND_REL_TOL,
    )


def check_tkur_classical_form(bundle, counting, tau):
    """古典形式 F_φ ≥ (4a/σ²)Φ(σ/2a)²；量子系統可違反，只作診斷"""
    _require_current(bundle, counting)
    sigma = entropy_production_rate(bundle)
    _, activity = channel_traffic(bundle)
    mean = mean_observable(bundle, counting, tau)
    if sigma <= 0.0 or abs(mean) <= mean_tolerance(bundle, tau):
        return BoundReport.inapplicable('tkur_classical_form', 'σ = 0 or zero mean current')
    fluctuation = tau * variance_exact(bundle, counting, tau) / mean ** 2
    report = BoundReport(name='tkur_classical_form', lhs=fluctuation, rhs=tkur_bound(sigma, activity),
                         kind='lower', certified=False,
                         components={'sigma': sigma, 'activity': activity},
                         tolerance=bundle.config.BOUND_REL_TOL)
    if not report.satisfied:
        logger.info("古典 TKUR 被違反: F = %.6g < %.6g", report.lhs, report.rhs)
    return report


def check_tur(bundle, counting, tau):
    """古典 TUR：F_φ ≥ 2/σ（僅在古典極限保證成立）"""
    sigma = entropy_production_rate(bundle)
    mean = mean_observable(bundle, counting, tau)
    if sigma <= 0.0 or abs(mean) <= mean_tolerance(bundle, tau):
        return BoundReport.inapplicable('tur', 'σ = 0 or zero mean')
    fluctuation = tau * variance_exact(bundle, counting, tau) / mean ** 2
    return BoundReport(name='tur', lhs=fluctuation, rhs=2 / sigma, certified=False,
                       components={'sigma': sigma}, tolerance=bundle.config.BOUND_REL_TOL)


def check_kur(bundle, counting, tau):
    """古典 KUR：F_φ ≥ 1/a"""
    _, activity = channel_traffic(bundle)
    mean = mean_observable(bundle, counting, tau)
    if abs(mean) <= mean_tolerance(bundle, tau):
        return BoundReport.inapplicable('kur', 'zero mean')
    fluctuation = tau * variance_exact(bundle, counting, tau) / mean ** 2
    return BoundReport(name='kur', lhs=fluctuation, rhs=1 / activity, certified=False,
                       components={'activity': activity}, tolerance=bundle.config.BOUND_REL_TOL)


# ===== 對稱化 Liouvillian 與 IUR =====

def symmetrized_gap(bundle, s):
    """L̃_s = (L̃ + L̃*)/2 在 s 內積下的譜隙 g_s = −λ₁

    Raises:
        StationaryStateError: π 不滿秩
        NumericalConsistencyError: λ₀ 不為零或特徵向量不是 W_s^{1/2}vec(1)
    """
    s = check_s(s)
    config = bundle.config
    if not bundle.full_rank:
        raise StationaryStateError("stationary state not full rank")
    pi = bundle.pi

    weight = weight_matrix(pi, s)
    weight_inv = weight_matrix(pi, s, power=-1.0)
    weight_sqrt = weight_matrix(pi, s, power=0.5)
    weight_sqrt_inv = weight_matrix(pi, s, power=-0.5)

    adjoint = bundle.adjoint.entries
    s_adjoint = weight_inv @ dagger(adjoint) @ weight
    symmetrized = (adjoint + s_adjoint) / 2

    similar = weight_sqrt @ symmetrized @ weight_sqrt_inv
    residue = la.norm(similar - dagger(similar))
    if residue > 1e-10 * max(1.0, la.norm(similar)):
        raise NumericalConsistencyError(f"對稱化矩陣不是 Hermitian (殘差 {residue:.3e})")
    values, vectors = la.eigh((similar + dagger(similar)) / 2)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]

    if abs(values[0]) > config.GAP_ZERO_TOL:
        raise NumericalConsistencyError(f"λ₀ = {values[0]:.3e} 不為零 (生成元不一致)")
    kernel = weight_sqrt @ identity_vector(bundle.dim)
    overlap = abs(np.vdot(kernel / la.norm(kernel), vectors[:, 0]))
    if abs(overlap - 1.0) > 1e-6:
        raise NumericalConsistencyError(f"λ₀ 特徵向量不是 W^(1/2)vec(1) (重疊 {overlap:.6f})")
    if values[1] >= 0.0:
        raise StationaryStateError(f"對稱化譜隙不為正: λ₁ = {values[1]:.3e}")

    logger.debug("g_%s = %.6g", s, -values[1])
    return GapData(s=s, eigenvalues=values, eigenvectors=vectors, weight=weight,
                   weight_sqrt=weight_sqrt, symmetrized=SuperOperatorMatrix(symmetrized, 'symmetrized'))


@dataclass
class IurComponents:
    j1: np.ndarray
    j2: np.ndarray
    jpi: np.ndarray
    j1_mean: float
    j2_mean: float
    norm_j1_bar: float
    norm_jpi_bar: float

    @property
    def kappa(self):
        return self.norm_j1_bar * self.norm_jpi_bar / self.j2_mean


def iur_components(bundle, counting, s):
    s = check_s(s)
    if counting.is_zero():
        raise ValueError("all-zero counting vector")
    if not bundle.full_rank:
        raise StationaryStateError("stationary state not full rank")
    pi = bundle.pi
    j1, j2, jpi = counting_operators(bundle, counting)
    j1_mean = np.trace(j1 @ pi)
    j2_mean = np.trace(j2 @ pi).real
    if abs(j1_mean - np.trace(jpi)) > 1e-12 * max(1.0, abs(j1_mean)):
        raise NumericalConsistencyError("⟨J₁,π⟩ ≠ tr J_π")
    if j2_mean <= 0.0:
        raise ValueError("⟨J₂,π⟩ = 0: 觀測量在穩態下不跳躍")

    eye = np.eye(bundle.dim)
    j1_bar = j1 - j1_mean * eye
    jpi_scaled = matrix_power_hermitian(pi, -s) @ jpi @ matrix_power_hermitian(pi, s - 1.0)
    return IurComponents(
        j1=j1, j2=j2, jpi=jpi, j1_mean=float(j1_mean.real), j2_mean=float(j2_mean),
        norm_j1_bar=norm_s(j1_bar, pi, s), norm_jpi_bar=norm_s(jpi_scaled - j1_mean * eye, pi, s),
    )


def check_iur(bundle, counting, tau, s):
    """F_φ ≤ (⟨J₂,π⟩/⟨J₁,π⟩²)(1 + 2κ/g_s)"""
    comps = iur_components(bundle, counting, s)
    if abs(comps.j1_mean) <= mean_tolerance(bundle, 1.0):
        raise ValueError("zero mean rate: ⟨J₁,π⟩ = 0")
    gap = symmetrized_gap(bundle, s).gap
    instantaneous = comps.j2_mean / comps.j1_mean ** 2
    mean = tau * comps.j1_mean
    variance = variance_exact(bundle, counting, tau)
    return BoundReport(
        name='iur', lhs=tau * variance / mean ** 2,
        rhs=instantaneous * (1 + 2 * comps.kappa / gap), kind='upper',
        components={'s': s, 'g_s': gap, 'kappa': comps.kappa, 'instantaneous_ratio': instantaneous,
                    'variance': variance},
        tolerance=bundle.config.BOUND_REL_TOL,
    )


def check_iur_variance(bundle, counting, tau, s):
    """Var[φ] ≤ τ⟨J₂,π⟩ + 2(e^{−g_sτ} + g_sτ − 1)/g_s² · ‖J̄₁‖_s‖π^{−s}J_ππ^{−(1−s)} − ⟨J₁,π⟩1‖_s"""
    comps = iur_components(bundle, counting, s)
    gap = symmetrized_gap(bundle, s).gap
    growth = (np.expm1(-gap * tau) + gap * tau) / gap ** 2
    rhs = tau * comps.j2_mean + 2 * growth * comps.norm_j1_bar * comps.norm_jpi_bar
    return BoundReport(name='iur_variance', lhs=variance_exact(bundle, counting, tau), rhs=rhs,
                       kind='upper', components={'s': s, 'g_s': gap},
                       tolerance=bundle.config.BOUND_REL_TOL)


def check_sandwich(bundle, counting, tau, s=0.5):
    """同一 current 的 TKUR 下界 ≤ F_φ/(1+δ)² 與 F_φ ≤ IUR 上界"""
    lower = check_tkur(bundle, counting, tau)
    upper = check_iur(bundle, counting, tau, s)
    if not lower.applicable:
        return BoundReport.inapplicable('sandwich', lower.reason)
    delta = lower.components['delta_phi']
    return BoundReport(name='sandwich', lhs=upper.rhs * (1 + delta) ** 2, rhs=lower.rhs, kind='lower',
                       components={'F': lower.components['F'], 'delta_phi': delta,
                                   'tkur_rhs': lower.rhs, 'iur_rhs': upper.rhs},
                       tolerance=bundle.config.BOUND_REL_TOL)


# ===== 響應梯度 =====

@dataclass
class ResponseGradient:
    values: Dict[int, float]
    finite_difference: Dict[int, float]
    mean: float

    @property
    def l1_norm(self):
        return float(sum(abs(v) for v in self.values.values()))

    @property
    def total(self):
        return float(sum(self.values.values()))


def _response_kernel(bundle, tau):
    """與計數向量無關的部分：K₂ D̂_k π 以及 ±h 擾動下的 K₁(ω) π"""
    step = bundle.config.RESPONSE_FD_STEP

    def build():
        props = bundle.propagators(tau)
        pi_vec = bundle.pi_vec
        analytic = {k: props.K2 @ (d.entries @ pi_vec) for k, d in bundle.dissipators.items()}
        shifted = {}
        for k in bundle.channel_ids:
            for sign in (1.0, -1.0):
                scale = np.exp(sign * step)
                generator = build_perturbed_generator(bundle.system, {k: scale})
                shifted[(k, sign)] = integrated_propagators(generator, tau).K1 @ pi_vec
        return analytic, shifted

    return bundle.memo(('response', float(tau)), build)


def response_gradient(bundle, counting, tau, check=True):
    """d_{ω_k}⟨φ⟩ = τ c_k t_k + ⟨⟨1|Ĉ K₂(τ) D̂_k π⟩⟩，初始態固定為未擾動的 π

    Raises:
        NumericalConsistencyError: 與中央有限差分的差距超出 RESPONSE_FD_RTOL
    """
    config = bundle.config
    weights = dict(zip(bundle.channel_ids, counting.as_array(bundle.system)))
    traffic, _ = channel_traffic(bundle)
    c_hat = bundle.jump_superoperator(counting)
    row = bundle.identity_vec @ c_hat
    analytic_kernel, shifted = _response_kernel(bundle, tau)

    values = {}
    for k in bundle.channel_ids:
        value = tau * weights[k] * traffic[k] + row @ analytic_kernel[k]
        values[k] = float(value.real)

    fd = {}
    if check:
        step = config.RESPONSE_FD_STEP
        one = bundle.identity_vec
        for k in bundle.channel_ids:
            op = bundle.system.jump(k)
            jump_k = weights[k] * np.kron(op, op.conj())
            samples = []
            for sign in (1.0, -1.0):
                row_shift = row + (np.exp(sign * step) - 1.0) * (one @ jump_k)
                samples.append(row_shift @ shifted[(k, sign)])
            fd[k] = float(((samples[0] - samples[1]) / (2 * step)).real)

        scale = max(max(abs(v) for v in values.values()), abs(mean_observable(bundle, counting, tau)))
        for k in bundle.channel_ids:
            if abs(values[k] - fd[k]) > config.RESPONSE_FD_RTOL * max(scale, 1e-300):
                raise NumericalConsistencyError(
                    f"響應梯度通道 {k}: 解析 {values[k]:.10g} vs 有限差分 {fd[k]:.10g}")

    return ResponseGradient(values=values, finite_difference=fd,
                            mean=mean_observable(bundle, counting, tau))


def check_rkur(bundle, counting, tau, gradient=None):
    """‖∇⟨φ⟩‖₁²/Var[φ] ≤ τa"""
    gradient = gradient or response_gradient(bundle, counting, tau)
    _, activity = channel_traffic(bundle)
    variance = variance_exact(bundle, counting, tau)
    norm = gradient.l1_norm
    if norm == 0.0:
        lhs = 0.0
    elif variance <= 0.0:
        raise ValueError("zero variance: 響應 KUR 未定義")
    else:
        lhs = norm ** 2 / variance
    return BoundReport(name='rkur', lhs=lhs, rhs=tau * activity, kind='upper',
                       components={'gradient_l1': norm, 'variance': variance, 'activity': activity},
                       tolerance=bundle.config.BOUND_REL_TOL)


def check_kur_response(bundle, counting, tau):
    """⟨φ⟩²/Var[φ] ≤ τa（ω_k 全部同步變化的特例）"""
    _, activity = channel_traffic(bundle)
    mean = mean_observable(bundle, counting, tau)
    variance = variance_exact(bundle, counting, tau)
    if variance <= 0.0:
        return BoundReport.inapplicable('kur_response', 'zero variance')
    return BoundReport(name='kur_response', lhs=mean ** 2 / variance, rhs=tau * activity, kind='upper',
                       components={'mean': mean, 'variance': variance},
                       tolerance=bundle.config.BOUND_REL_TOL)


def check_eps_response(bundle, counting, tau, omega_derivatives, epsilon=0.0, claimed_response=None):
    """(d_ε⟨φ⟩)² ≤ τ ω_max² Var[φ] a

    Args:
        omega_derivatives: {k: ω_k′(ε)}，缺少的通道視為 0
        claimed_response: 若提供，與 Σ ω_k′ d_{ω_k}⟨φ⟩ 比對
    """
    derivs = {k: float(omega_derivatives.get(k, 0.0)) for k in bundle.channel_ids}
    omega_max = max(abs(v) for v in derivs.values())
    if omega_max == 0.0 and claimed_response:
        raise ValueError("所有 ω_k′ = 0 但宣稱響應不為零")

    gradient = response_gradient(bundle, counting, tau)
    response = sum(derivs[k] * gradient.values[k] for k in bundle.channel_ids)
    if claimed_response is not None and abs(response - claimed_response) > 1e-6 * max(1.0, abs(response)):
        raise NumericalConsistencyError(f"宣稱響應 {claimed_response} 與計算值 {response} 不符")

    _, activity = channel_traffic(bundle)
    variance = variance_exact(bundle, counting, tau)
    return BoundReport(name='eps_response', lhs=response ** 2,
                       rhs=tau * omega_max ** 2 * variance * activity, kind='upper',
                       components={'epsilon': float(epsilon), 'd_epsilon': response,
                                   'omega_max': omega_max, 'variance': variance},
                       tolerance=bundle.config.BOUND_REL_TOL)


# ===== 熱機功率-效率 =====

def _check_bath_consistency(bundle, heat_hot, heat_cold, temp_hot, temp_cold):
    pairing = bundle.system.pairing
    if pairing is None:
        raise QuantumModelError("σ undefined without local detailed balance")
    for k in bundle.channel_ids:
        ds = pairing.entropy_change(k)
        expected = None
        if heat_hot.weights.get(k, 0.0) != 0.0:
            expected = -heat_hot.weights[k] / temp_hot
        elif heat_cold.weights.get(k, 0.0) != 0.0:
            expected = heat_cold.weights[k] / temp_cold
        if expected is not None and abs(ds - expected) > 1e-8 * max(1.0, abs(expected)):
            raise QuantumModelError(
                f"通道 {k}: Δs = {ds:.10g} 與熱庫溫度推得的 {expected:.10g} 不一致")


def engine_point(bundle, heat_hot, heat_cold):
    """穩態功率 P 與效率 η（不需要 τ）"""
    hot_rate = mean_observable(bundle, heat_hot, 1.0)
    cold_rate = mean_observable(bundle, heat_cold, 1.0)
    power = hot_rate - cold_rate
    efficiency = power / hot_rate if hot_rate != 0.0 else 0.0
    return power, efficiency


def check_power_efficiency(bundle, heat_hot, heat_cold, temp_hot, temp_cold, tau):
    """P·η/(η_C − η)·T_c(1+δ_P)²/Δ_P ≤ 1/2，只在熱機區間 (P > 0, 0 < η < η_C) 適用"""
    _check_bath_consistency(bundle, heat_hot, heat_cold, temp_hot, temp_cold)
    power = (mean_observable(bundle, heat_hot, tau) - mean_observable(bundle, heat_cold, tau)) / tau
    hot = mean_observable(bundle, heat_hot, tau)
    efficiency = power * tau / hot if hot != 0.0 else 0.0
    carnot = 1.0 - temp_cold / temp_hot
    regime = {'power': power, 'efficiency': efficiency, 'carnot': carnot}
    if not (power > 0.0 and 0.0 < efficiency < carnot):
        return BoundReport.inapplicable('power_efficiency', 'not in engine regime', regime)

    work = heat_hot - heat_cold
    rate, rate_check, converged = variance_rate_asymptotic(bundle, work)
    if not converged:
        raise NumericalConsistencyError(f"Δ_P 未收斂: {rate:.10g} vs {rate_check:.10g}")
    delta = delta_phi(bundle, work, mode='asymptotic')
    lhs = power * efficiency / (carnot - efficiency) * temp_cold * (1 + delta) ** 2 / rate
    regime.update({'delta_p': delta, 'variance_rate': rate})
    return BoundReport(name='power_efficiency', lhs=lhs, rhs=0.5, kind='upper', components=regime,
                       tolerance=bundle.config.BOUND_REL_TOL)


def scan_engine_regime(points, heat_hot, heat_cold, temp_hot, temp_cold):
    """掃描 (參數值, bundle) 序列，回傳每點的 (值, P, η, 是否在熱機區間)"""
    carnot = 1.0 - temp_cold / temp_hot
    rows = []
    for value, bundle in points:
        power, efficiency = engine_point(bundle, heat_hot, heat_cold)
        rows.append((value, power, efficiency, bool(power > 0.0 and 0.0 < efficiency < carnot)))
    return rows
