"""
Liouvillian 模組 - 超算子矩陣建構
生成元、伴隨、傾斜生成元、單通道耗散項、穩態、群逆與積分傳播子
"""

import logging
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from config import Config
from modules.core import (
    CountingVector, DensityOperator, NumericalConsistencyError, QuantumModelError,
    StationaryStateError, dagger, identity_vector, unvectorize, validate_system, vectorize,
)

# 設置日誌
logger = logging.getLogger(__name__)

KINDS = ('generator', 'adjoint', 'tilted', 'dissipator_channel', 'symmetrized')


@dataclass(frozen=True)
class SuperOperatorMatrix:
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"未知超算子類型: {self.kind}")
        arr = np.array(self.entries, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, 'entries', arr)

    @property
    def dim2(self):
        return self.entries.shape[0]

    @property
    def dim(self):
        return int(round(np.sqrt(self.dim2)))

    def apply(self, matrix):
        """作用在矩陣上並傳回矩陣"""
        return unvectorize(self.entries @ vectorize(matrix))


@dataclass(frozen=True)
class Propagators:
    """P = e^{Ĝτ}, K₁ = ∫₀^τ e^{Ĝt}dt, K₂ = ∫₀^τ (τ−t) e^{Ĝt}dt"""
    tau: float
    P: np.ndarray
    K1: np.ndarray
    K2: np.ndarray


def _hamiltonian_part(h, sign=-1.0):
    eye = np.eye(h.shape[0])
    return sign * 1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _dissipator(jump, jump_factor=1.0):
    eye = np.eye(jump.shape[0])
    ldl = dagger(jump) @ jump
    return (jump_factor * np.kron(jump, jump.conj())
            - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))


def _assemble(system, factors):
    total = _hamiltonian_part(system.hamiltonian.entries)
    for jump, factor in zip(system.jumps, factors):
        total = total + _dissipator(jump.entries, factor)
    return total


def _check_trace_annihilation(entries, dim, config):
    residual = la.norm(identity_vector(dim) @ entries)
    if residual > config.GENERATOR_TOL * max(1.0, la.norm(entries)):
        raise NumericalConsistencyError(f"⟨⟨1|L̂ ≠ 0 (殘差 {residual:.3e})")


def build_generator(system, config=None):
    """L̂ = −i(H⊗1 − 1⊗Hᵀ) + Σ_k [L_k⊗L_k* − ½(L_k†L_k)⊗1 − ½1⊗(L_k†L_k)ᵀ]"""
    config = config or Config()
    entries = _assemble(system, [1.0 + 0j] * len(system.jumps))
    _check_trace_annihilation(entries, system.dim, config)
    return SuperOperatorMatrix(entries, 'generator')


def build_adjoint(system, config=None):
    """Heisenberg 圖像的 L̃̂ = L̂†，直接由 i[H,·] 與 L†·L 項組成"""
    eye = np.eye(system.dim)
    total = _hamiltonian_part(system.hamiltonian.entries, sign=1.0)
    for jump in system.jumps:
        op = jump.entries
        ldl = dagger(op) @ op
        total = total + (np.kron(dagger(op), op.T)
                         - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    unital = la.norm(total @ identity_vector(system.dim))
    if unital > (config or Config()).GENERATOR_TOL * max(1.0, la.norm(total)):
        raise NumericalConsistencyError(f"L̃(1) ≠ 0 (殘差 {unital:.3e})")
    return SuperOperatorMatrix(total, 'adjoint')


def build_tilted(system, counting, u):
    """跳躍項乘上 e^{iuc_k}；u = 0 時與 build_generator 逐位元相同"""
    weights = counting.as_array(system)
    factors = np.exp(1j * float(u) * weights)
    return SuperOperatorMatrix(_assemble(system, factors), 'tilted')


def build_channel_dissipator(system, k):
    return SuperOperatorMatrix(_dissipator(system.jump(k)), 'dissipator_channel')


def build_jump_superoperator(system, counting):
    """Ĉ = Σ_k c_k L_k⊗L_k*，計數觀測量的跳躍部分"""
    total = np.zeros((system.dim ** 2,) * 2, dtype=complex)
    for jump, c in zip(system.jumps, counting.as_array(system)):
        if c != 0.0:
            total = total + c * np.kron(jump.entries, jump.entries.conj())
    return total


def build_perturbed_generator(system, scales):
    """以 L_k → √scale_k · L_k 重建生成元，scales 為 {k: 倍率}"""
    total = _hamiltonian_part(system.hamiltonian.entries)
    for jump in system.jumps:
        total = total + scales.get(jump.channel_id, 1.0) * _dissipator(jump.entries)
    return SuperOperatorMatrix(total, 'generator')


def stationary_state(generator, config=None):
    """由 L̂ 的最小奇異向量求穩態

    Args:
        generator: kind 為 generator 的 SuperOperatorMatrix

    Returns:
        DensityOperator: 跡為 1 的穩態 π

    Raises:
        StationaryStateError: 核不唯一或核向量無法正規化為密度矩陣
    """
    config = config or Config()
    if generator.kind != 'generator':
        raise ValueError(f"stationary_state 需要 generator，得到 {generator.kind}")

    _, singular, vh = la.svd(generator.entries)
    if singular[-2] <= config.KERNEL_TOL:
        raise StationaryStateError(
            f"non-unique stationary state (第二小奇異值 {singular[-2]:.3e})")

    candidate = unvectorize(vh[-1].conj())
    trace = np.trace(candidate)
    if abs(trace) < 1e-14:
        raise StationaryStateError("kernel vector not positive-normalizable (跡為零)")
    candidate = candidate / trace
    candidate = (candidate + dagger(candidate)) / 2

    try:
        state = DensityOperator(candidate)
    except QuantumModelError as exc:
        raise StationaryStateError(f"kernel vector not positive-normalizable: {exc}") from exc

    residual = la.norm(generator.entries @ vectorize(state.entries))
    if residual > config.GENERATOR_TOL * max(1.0, la.norm(generator.entries)):
        raise StationaryStateError(f"‖L(π)‖ = {residual:.3e} 超出容差")
    return state


def group_inverse_apply(generator, pi, v, config=None):
    """群逆 L⁺v（文獻常稱 Moore-Penrose 偽逆，實際定義式為群逆）

    解加邊系統 [[L̂, vec π], [⟨⟨1|, 0]] [x; μ] = [v; 0]，
    得到 L̂x = v 且 ⟨⟨1|x = 0 的唯一解。
    """
    config = config or Config()
    entries = generator.entries if isinstance(generator, SuperOperatorMatrix) else np.asarray(generator)
    pi_mat = pi.entries if isinstance(pi, DensityOperator) else np.asarray(pi)
    n = entries.shape[0]
    v = np.asarray(v, dtype=complex)
    one = identity_vector(pi_mat.shape[0])

    kernel_part = one @ v
    if abs(kernel_part) > config.GENERATOR_TOL * max(1.0, la.norm(v)):
        raise ValueError(f"向量含有核分量 ⟨⟨1|v = {kernel_part:.3e}")
    pi_vec = vectorize(pi_mat)
    v = v - pi_vec * kernel_part

    bordered = np.zeros((n + 1, n + 1), dtype=complex)
    bordered[:n, :n] = entries
    bordered[:n, n] = pi_vec
    bordered[n, :n] = one
    rhs = np.concatenate([v, [0.0]])
    try:
        solution = la.solve(bordered, rhs)
    except la.LinAlgError as exc:
        raise StationaryStateError(f"singular projected system: {exc}") from exc
    return solution[:n]


def integrated_propagators(generator, tau):
    """以一次 3n×3n 區塊矩陣指數同時取得 P、K₁、K₂"""
    if tau < 0:
        raise ValueError(f"τ 必須 ≥ 0，得到 {tau}")
    entries = generator.entries if isinstance(generator, SuperOperatorMatrix) else np.atleast_2d(generator)
    n = entries.shape[0]
    eye = np.eye(n)
    block = np.zeros((3 * n, 3 * n), dtype=complex)
    block[:n, :n] = entries
    block[:n, n:2 * n] = eye
    block[n:2 * n, 2 * n:] = eye
    expo = la.expm(block * float(tau))
    return Propagators(tau=float(tau), P=expo[:n, :n], K1=expo[:n, n:2 * n], K2=expo[:n, 2 * n:])


def liouvillian_spectrum(generator):
    """L̂ 的特徵值，依實部由大到小排序（僅供診斷）"""
    values = la.eigvals(generator.entries)
    return values[np.argsort(-values.real, kind='stable')]


class LiouvillianBundle:
    """封裝一個已檢查模型的全部超算子與穩態，建構後不可變"""

    def __init__(self, system, config=None):
        self.config = config or Config()
        report = validate_system(system, self.config)
        if not report.passed:
            raise QuantumModelError("模型檢查失敗: " + '; '.join(report.failures))

        self.system = system
        self.report = report
        self.generator = build_generator(system, self.config)
        self.adjoint = build_adjoint(system, self.config)
        self.dissipators = {k: build_channel_dissipator(system, k) for k in system.channel_ids}
        self.stationary = stationary_state(self.generator, self.config)

        chi = liouvillian_spectrum(self.generator)
        self.spectral_gap_real = float(-np.max(chi[1:].real)) if chi.size > 1 else float('inf')

        self._cache = {}
        self._lock = threading.Lock()

        if not self.full_rank:
            logger.warning("⚠️  穩態不滿秩 (最小特徵值 %.3e)，s 內積相關量不可用",
                           self.stationary.min_eigenvalue)
        logger.debug("Liouvillian 建構完成: d=%d, 譜隙 %.4g", system.dim, self.spectral_gap_real)

    @property
    def dim(self):
        return self.system.dim

    @property
    def channel_ids(self):
        return self.system.channel_ids

    @property
    def pi(self):
        return self.stationary.entries

    @property
    def pi_vec(self):
        return vectorize(self.stationary.entries)

    @property
    def identity_vec(self):
        return identity_vector(self.dim)

    @property
    def full_rank(self):
        return self.stationary.is_full_rank(self.config.RANK_TOL)

    def memo(self, key, factory):
        """依 key 快取昂貴的推導量（例如固定 τ 的傳播子）"""
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = factory()
        with self._lock:
            return self._cache.setdefault(key, value)

    def propagators(self, tau):
        return self.memo(('propagators', float(tau)),
                         lambda: integrated_propagators(self.generator, tau))

    def group_inverse_apply(self, v):
        return group_inverse_apply(self.generator, self.stationary, v, self.config)

    def evolve(self, rho, t):
        """e^{L̂t}(ρ)"""
        rho = rho.entries if isinstance(rho, DensityOperator) else np.asarray(rho)
        return unvectorize(la.expm(self.generator.entries * float(t)) @ vectorize(rho))

    def jump_superoperator(self, counting):
        counting.require_covers(self.system)
        return build_jump_superoperator(self.system, counting)

    def learning_dissipator(self, coefficients):
        """D̂_ℓ = Σ_k ℓ_k D̂_k"""
        total = np.zeros((self.dim ** 2,) * 2, dtype=complex)
        for k, ell in coefficients.items():
            if ell != 0.0:
                total = total + ell * self.dissipators[k].entries
        return total


def counting_for(bundle, values):
    """便利函式：依通道順序建立 CountingVector"""
    return CountingVector.from_sequence(bundle.system, values)
