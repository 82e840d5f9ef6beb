"""
統計模組 - 計數觀測量的有限時間統計
平均值、變異數（精確積分與 FCS 數值微分）、熵產生率、動態活性與量子 Fisher 資訊
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import scipy.linalg as la

from modules.core import NumericalConsistencyError, QuantumModelError, dagger, vectorize
from modules.liouvillian import build_tilted

# 設置日誌
logger = logging.getLogger(__name__)

METHODS = ('exact_integral', 'fcs_numeric', 'monte_carlo')


@dataclass
class ObservableStats:
    mean: float
    variance: float
    tau: float
    method: str
    mean_tol: float = 0.0
    mean_se: Optional[float] = None
    variance_se: Optional[float] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"未知方法: {self.method}")
        if self.variance < 0:
            raise NumericalConsistencyError(f"變異數為負: {self.variance:.3e}")

    @property
    def relative_fluctuation(self):
        """F_φ = τ·Var/⟨φ⟩²；|⟨φ⟩| ≤ mean_tol 時未定義 (None)"""
        if abs(self.mean) <= self.mean_tol:
            return None
        return self.tau * self.variance / self.mean ** 2


@dataclass
class ThermoRates:
    traffic: Dict[int, float]
    activity: float
    entropy_production: Optional[float] = None


@dataclass
class QfiChain:
    """I_q 率與其上界鏈 rate ≤ (σ²/4a)Φ(σ/2a)⁻² ≤ min(σ/2, a)"""
    rate: float
    coefficients: Dict[int, float]
    jensen_bound: float
    kinetic_bound: float
    satisfied: bool = field(default=False)


# ===== 穩態速率 =====

def channel_traffic(bundle):
    """t_k = tr(L_k π L_k†) 與 a = Σ_k t_k"""
    traffic = {}
    for jump in bundle.system.jumps:
        op = jump.entries
        value = np.trace(op @ bundle.pi @ dagger(op)).real
        if value < -1e-12:
            raise NumericalConsistencyError(f"通道 {jump.channel_id} 流量為負: {value:.3e}")
        traffic[jump.channel_id] = max(float(value), 0.0)
    return traffic, float(sum(traffic.values()))


def entropy_production_rate(bundle):
    pairing = bundle.system.pairing
    if pairing is None:
        raise QuantumModelError("σ undefined without local detailed balance")
    traffic, _ = channel_traffic(bundle)
    sigma = 0.0
    for k, t_k in traffic.items():
        if t_k > 0.0:
            sigma += t_k * pairing.entropy_change(k)
    if sigma < -1e-10:
        raise NumericalConsistencyError(f"熵產生率為負: σ = {sigma:.3e}")
    return max(float(sigma), 0.0)


def thermo_rates(bundle):
    traffic, activity = channel_traffic(bundle)
    sigma = entropy_production_rate(bundle) if bundle.system.pairing is not None else None
    return ThermoRates(traffic=traffic, activity=activity, entropy_production=sigma)


def entropy_production_transient(bundle, rho):
    """任意滿秩態 ρ 的總熵產生率 σ_sys + σ_env

    σ_sys = −tr(L(ρ) ln ρ)，σ_env = Σ_k tr(L_k ρ L_k†) Δs_k。
    """
    pairing = bundle.system.pairing
    if pairing is None:
        raise QuantumModelError("σ undefined without local detailed balance")
    rho = np.asarray(rho, dtype=complex)
    w, v = la.eigh((rho + dagger(rho)) / 2)
    if w[0] <= bundle.config.RANK_TOL:
        raise ValueError("ρ 必須滿秩才能計算 ln ρ")
    log_rho = (v * np.log(w)) @ dagger(v)
    drho = bundle.generator.apply(rho)
    sigma_sys = -np.trace(drho @ log_rho).real
    sigma_env = 0.0
    for jump in bundle.system.jumps:
        op = jump.entries
        flow = np.trace(op @ rho @ dagger(op)).real
        if flow > 0.0:
            sigma_env += flow * pairing.entropy_change(jump.channel_id)
    return float(sigma_sys), float(sigma_env)


# ===== 平均值與變異數 =====

def mean_tolerance(bundle, tau):
    _, activity = channel_traffic(bundle)
    return bundle.config.MEAN_TOL_FACTOR * activity * tau


def mean_observable(bundle, counting, tau):
    """⟨φ⟩ = τ Σ_k c_k t_k（穩態初始條件）"""
    weights = counting.as_array(bundle.system)
    traffic, _ = channel_traffic(bundle)
    rates = np.array([traffic[k] for k in bundle.channel_ids])
    return float(tau * np.dot(weights, rates))


def counting_operators(bundle, counting):
    """J₁ = Σc_k L_k†L_k，J₂ = Σc_k² L_k†L_k，J_π = Σc_k L_k π L_k†"""
    dim = bundle.dim
    j1 = np.zeros((dim, dim), dtype=complex)
    j2 = np.zeros((dim, dim), dtype=complex)
    jpi = np.zeros((dim, dim), dtype=complex)
    for jump, c in zip(bundle.system.jumps, counting.as_array(bundle.system)):
        if c == 0.0:
            continue
        op = jump.entries
        ldl = dagger(op) @ op
        j1 += c * ldl
        j2 += c * c * ldl
        jpi += c * op @ bundle.pi @ dagger(op)
    return j1, j2, jpi


def variance_exact(bundle, counting, tau):
    """Var[φ] = τ⟨J₂,π⟩ + 2 vec(J̄₁)† K₂(τ) vec(J_π)

    Raises:
        NumericalConsistencyError: 結果虛部或負值超出容差
    """
    if tau < 0:
        raise ValueError(f"τ 必須 ≥ 0，得到 {tau}")
    config = bundle.config
    j1, j2, jpi = counting_operators(bundle, counting)
    first = tau * np.trace(j2 @ bundle.pi).real
    j1_mean = np.trace(j1 @ bundle.pi)
    j1_bar = j1 - j1_mean * np.eye(bundle.dim)
    correlation = np.vdot(vectorize(j1_bar), bundle.propagators(tau).K2 @ vectorize(jpi))
    value = first + 2.0 * correlation

    scale = max(1.0, abs(first), abs(value))
    if abs(value.imag) > 1e-10 * scale:
        raise NumericalConsistencyError(f"變異數虛部過大: {value.imag:.3e}")
    if value.real < -config.VARIANCE_NEG_TOL * scale:
        raise NumericalConsistencyError(f"變異數為負: {value.real:.3e}")
    return float(max(value.real, 0.0))


def _generating_function(bundle, counting, tau, u):
    tilted = build_tilted(bundle.system, counting, u)
    return bundle.identity_vec @ (la.expm(tilted.entries * tau) @ bundle.pi_vec)


def _richardson(estimates, order=2):
    """以步長減半序列外插，誤差階 h^order"""
    table = list(estimates)
    factor = 2.0 ** order
    while len(table) > 1:
        table = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(table, table[1:])]
        factor *= 2.0 ** order
    return table[0]


def moments_fcs(bundle, counting, tau, n=2):
    """以生成函數 G_τ(u) = tr e^{L_u τ}(π) 的中央差分求 ⟨φ⟩ 與 ⟨φ²⟩

    Returns:
        dict: {1: ⟨φ⟩} 或 {1: ⟨φ⟩, 2: ⟨φ²⟩}
    """
    if n not in (1, 2):
        raise ValueError(f"只支援 n ∈ {{1, 2}}，得到 {n}")
    config = bundle.config
    steps = [config.FCS_STEP / 2 ** level for level in range(config.FCS_RICHARDSON + 1)]

    g0 = _generating_function(bundle, counting, tau, 0.0)
    first, second = [], []
    for h in steps:
        gp = _generating_function(bundle, counting, tau, h)
        gm = _generating_function(bundle, counting, tau, -h)
        if not all(np.isfinite(x) for x in (g0, gp, gm)):
            raise NumericalConsistencyError(f"生成函數在 u = ±{h} 非有限")
        first.append((gp - gm) / (2 * h))
        second.append((gp - 2 * g0 + gm) / h ** 2)

    moments = {1: float((-1j * _richardson(first)).real)}
    if n == 2:
        moments[2] = float((-_richardson(second)).real)
    return moments


def variance_fcs(bundle, counting, tau):
    moments = moments_fcs(bundle, counting, tau, n=2)
    return max(moments[2] - moments[1] ** 2, 0.0)


def observable_stats(bundle, counting, tau, method='exact_integral'):
    tol = mean_tolerance(bundle, tau)
    if method == 'exact_integral':
        return ObservableStats(mean=mean_observable(bundle, counting, tau),
                               variance=variance_exact(bundle, counting, tau),
                               tau=tau, method=method, mean_tol=tol)
    if method == 'fcs_numeric':
        moments = moments_fcs(bundle, counting, tau, n=2)
        return ObservableStats(mean=moments[1], variance=max(moments[2] - moments[1] ** 2, 0.0),
                               tau=tau, method=method, mean_tol=tol)
    raise ValueError(f"observable_stats 不支援方法 {method}（蒙地卡羅請用 trajectories 模組）")


def variance_rate_asymptotic(bundle, counting, tau0=None):
    """lim Var/τ 的大 τ 斜率估計

    Returns:
        tuple: (在 τ₀ 的斜率, 在 2τ₀ 的斜率, 是否收斂)
    """
    config = bundle.config
    tau0 = config.DELTA_P_TAU0 if tau0 is None else float(tau0)
    v1 = variance_exact(bundle, counting, tau0)
    v2 = variance_exact(bundle, counting, 2 * tau0)
    v4 = variance_exact(bundle, counting, 4 * tau0)
    rate = (v2 - v1) / tau0
    rate_check = (v4 - v2) / (2 * tau0)
    converged = abs(rate - rate_check) <= config.DELTA_P_RTOL * max(abs(rate_check), 1e-300)
    if not converged:
        logger.warning("⚠️  Δ_P 尚未收斂: %.6g vs %.6g", rate, rate_check)
    return rate, rate_check, converged


# ===== 量子 Fisher 資訊 =====

def qfi_tkur_rate(bundle):
    """Σ_k ℓ_k² t_k 以及上界鏈檢查"""
    from modules.bounds import phi_inverse, tkur_coefficients

    coefficients = tkur_coefficients(bundle)
    traffic, activity = channel_traffic(bundle)
    sigma = entropy_production_rate(bundle)
    rate = float(sum(coefficients[k] ** 2 * traffic[k] for k in traffic))

    if sigma == 0.0:
        jensen = 0.0
    else:
        jensen = sigma ** 2 / (4 * activity) / phi_inverse(sigma / (2 * activity)) ** 2
    kinetic = min(sigma / 2, activity)
    tol = bundle.config.BOUND_REL_TOL
    satisfied = (rate <= jensen * (1 + tol) + 1e-15) and (jensen <= kinetic * (1 + tol) + 1e-15)
    return QfiChain(rate=rate, coefficients=coefficients, jensen_bound=float(jensen),
                    kinetic_bound=float(kinetic), satisfied=satisfied)


def qfi_response_rate(bundle, epsilon):
    _, activity = channel_traffic(bundle)
    return float(epsilon) ** 2 * activity


def _two_sided_generator(bundle, coefficients, theta1, theta2):
    system = bundle.system
    eye = np.eye(bundle.dim)
    h = system.hamiltonian.entries
    total = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for jump in system.jumps:
        op = jump.entries
        ell = coefficients.get(jump.channel_id, 0.0)
        left, right = 1.0 + ell * theta1, 1.0 + ell * theta2
        ldl = dagger(op) @ op
        total = total + (np.sqrt(left * right) * np.kron(op, op.conj())
                         - 0.5 * left * np.kron(ldl, eye) - 0.5 * right * np.kron(eye, ldl.T))
    return total


def fisher_information_numeric(bundle, tau, coefficients=None, step=1e-4):
    """I_q(0) = 4 ∂²_{θ₁θ₂} ln|tr e^{L_θ τ}(π)|，四點混合中央差分"""
    if coefficients is None:
        from modules.bounds import tkur_coefficients
        coefficients = tkur_coefficients(bundle)

    def log_trace(t1, t2):
        generator = _two_sided_generator(bundle, coefficients, t1, t2)
        value = bundle.identity_vec @ (la.expm(generator * tau) @ bundle.pi_vec)
        return np.log(abs(value))

    mixed = (log_trace(step, step) - log_trace(step, -step)
             - log_trace(-step, step) + log_trace(-step, -step)) / (4 * step ** 2)
    return float(4 * mixed)
