"""
核心模組 - 稠密複數矩陣基礎
算子型別、向量化 (row-major |m⟩⊗|n⟩)、s 加權內積與模型檢查
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.linalg as la

from config import Config

# 設置日誌
logger = logging.getLogger(__name__)

ALLOWED_S = (0.0, 0.5)


class QuantumModelError(ValueError):
    """算子、配對、計數向量或模型檔案不合法"""


class StationaryStateError(RuntimeError):
    """穩態不唯一、不滿秩或無法正規化"""


class NumericalConsistencyError(RuntimeError):
    """數值交叉檢查失敗（負變異數、有限差分不一致、範數增長等）"""


def _frozen_matrix(matrix, name):
    arr = np.array(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise QuantumModelError(f"{name}: 需要方陣，得到形狀 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise QuantumModelError(f"{name}: 含有非有限元素")
    arr.setflags(write=False)
    return arr


def dagger(a):
    return np.conj(np.transpose(a))


def hermiticity_residual(a):
    """相對 Frobenius 殘差 ‖A − A†‖/‖A‖"""
    norm = la.norm(a)
    if norm == 0.0:
        return 0.0
    return float(la.norm(a - dagger(a)) / norm)


# ===== 型別 =====

@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_matrix(self.entries, 'hamiltonian')
        if arr.shape[0] < 2:
            raise QuantumModelError("hamiltonian: 維度必須 ≥ 2")
        residual = hermiticity_residual(arr)
        if residual > Config.HERMITICITY_TOL:
            raise QuantumModelError(f"hamiltonian: 不是 Hermitian (殘差 {residual:.3e})")
        object.__setattr__(self, 'entries', arr)

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class JumpOperator:
    entries: np.ndarray
    channel_id: int

    def __post_init__(self):
        arr = _frozen_matrix(self.entries, f'jump[{self.channel_id}]')
        if int(self.channel_id) < 1:
            raise QuantumModelError(f"jump[{self.channel_id}]: channel_id 必須 ≥ 1")
        object.__setattr__(self, 'entries', arr)
        object.__setattr__(self, 'channel_id', int(self.channel_id))

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class DetailedBalancePairing:
    """局部細緻平衡配對 L_k = e^{Δs_k/2} L_{k*}†

    pairs 包含每個通道的 (k, k*, Δs_k)，雙向都要列出。
    """
    pairs: Tuple[Tuple[int, int, float], ...]

    def __post_init__(self):
        table = {}
        for k, k_star, ds in self.pairs:
            k, k_star, ds = int(k), int(k_star), float(ds)
            if k in table:
                raise QuantumModelError(f"pairing: 通道 {k} 重複")
            if not np.isfinite(ds):
                raise QuantumModelError(f"pairing[{k}].ds: 非有限值")
            table[k] = (k_star, ds)
        for k, (k_star, ds) in table.items():
            if k_star not in table or table[k_star][0] != k:
                raise QuantumModelError(f"pairing[{k}]: 配對不是對合 (k*={k_star})")
            if abs(table[k_star][1] + ds) > 1e-12 * max(1.0, abs(ds)):
                raise QuantumModelError(f"pairing[{k}]: Δs_k* ≠ −Δs_k")
            if k_star == k and ds != 0.0:
                raise QuantumModelError(f"pairing[{k}]: 自配對通道需 Δs = 0")
        object.__setattr__(self, 'pairs', tuple(
            (k, table[k][0], table[k][1]) for k in sorted(table)))

    @classmethod
    def from_pairs(cls, one_way):
        """由單向列表 [(k, k*, Δs_k), ...] 補齊反向項目"""
        entries = {}
        for k, k_star, ds in one_way:
            entries[int(k)] = (int(k), int(k_star), float(ds))
            entries[int(k_star)] = (int(k_star), int(k), -float(ds) if k != k_star else 0.0)
        return cls(tuple(entries[k] for k in sorted(entries)))

    def partner(self, k):
        for kk, k_star, _ in self.pairs:
            if kk == k:
                return k_star
        raise QuantumModelError(f"pairing: 未知通道 {k}")

    def entropy_change(self, k):
        for kk, _, ds in self.pairs:
            if kk == k:
                return ds
        raise QuantumModelError(f"pairing: 未知通道 {k}")

    @property
    def channel_ids(self):
        return tuple(k for k, _, _ in self.pairs)


@dataclass(frozen=True)
class OpenSystem:
    hamiltonian: HermitianOperator
    jumps: Tuple[JumpOperator, ...]
    pairing: Optional[DetailedBalancePairing] = None
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        jumps = tuple(self.jumps)
        if not jumps:
            raise QuantumModelError("jumps: 至少需要一個跳躍算子")
        dim = self.hamiltonian.dim
        for jump in jumps:
            if jump.dim != dim:
                raise QuantumModelError(
                    f"jump[{jump.channel_id}]: 維度 {jump.dim} 與 hamiltonian 維度 {dim} 不符")
        object.__setattr__(self, 'jumps', jumps)
        object.__setattr__(self, 'notes', tuple(self.notes))

    @property
    def dim(self):
        return self.hamiltonian.dim

    @property
    def channel_ids(self):
        return tuple(j.channel_id for j in self.jumps)

    def jump(self, k):
        for j in self.jumps:
            if j.channel_id == k:
                return j.entries
        raise QuantumModelError(f"未知通道 {k}")


@dataclass(frozen=True)
class DensityOperator:
    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_matrix(self.entries, 'density')
        if la.norm(arr - dagger(arr)) > Config.HERMITICITY_TOL * max(1.0, la.norm(arr)):
            raise QuantumModelError("density: 不是 Hermitian")
        if abs(np.trace(arr) - 1.0) > Config.TRACE_TOL:
            raise QuantumModelError(f"density: 跡 {np.trace(arr).real:.12f} ≠ 1")
        if self.min_eigenvalue_of(arr) < -Config.POSITIVITY_TOL:
            raise QuantumModelError("density: 存在負特徵值")
        object.__setattr__(self, 'entries', arr)

    @staticmethod
    def min_eigenvalue_of(arr):
        return float(la.eigvalsh((arr + dagger(arr)) / 2)[0])

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def min_eigenvalue(self):
        return self.min_eigenvalue_of(self.entries)

    def is_full_rank(self, rank_tol=None):
        tol = Config.RANK_TOL if rank_tol is None else rank_tol
        return self.min_eigenvalue > tol


@dataclass(frozen=True)
class CountingVector:
    """每個通道的實數權重 c_k，定義軌跡觀測量 φ"""
    weights: Mapping[int, float]

    def __post_init__(self):
        table = {int(k): float(v) for k, v in dict(self.weights).items()}
        for k, v in table.items():
            if not np.isfinite(v):
                raise QuantumModelError(f"counting[{k}]: 非有限權重")
        object.__setattr__(self, 'weights', table)

    @classmethod
    def from_sequence(cls, system, values):
        values = list(values)
        if len(values) != len(system.jumps):
            raise QuantumModelError(
                f"counting: 需要 {len(system.jumps)} 個權重，得到 {len(values)}")
        return cls(dict(zip(system.channel_ids, values)))

    def weight(self, k):
        return self.weights[k]

    def require_covers(self, system):
        missing = [k for k in system.channel_ids if k not in self.weights]
        if missing:
            raise QuantumModelError(f"counting: 缺少通道權重 {missing}")

    def as_array(self, system):
        self.require_covers(system)
        return np.array([self.weights[k] for k in system.channel_ids], dtype=float)

    def is_zero(self):
        return all(v == 0.0 for v in self.weights.values())

    def is_current(self, system):
        """只有在存在配對且 c_k = −c_{k*} 時才算 current"""
        if system.pairing is None:
            return False
        self.require_covers(system)
        for k, k_star, _ in system.pairing.pairs:
            if abs(self.weights[k] + self.weights[k_star]) > 1e-12 * max(1.0, abs(self.weights[k])):
                return False
        return True

    def __sub__(self, other):
        keys = sorted(set(self.weights) | set(other.weights))
        return CountingVector({k: self.weights.get(k, 0.0) - other.weights.get(k, 0.0) for k in keys})


@dataclass
class ValidationReport:
    passed: bool
    hermiticity_residual: float
    pairing_residuals: Dict[int, float] = field(default_factory=dict)
    duplicate_ids: List[int] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)


# ===== 向量化 =====

def vectorize(a):
    """row-major 堆疊：vec(A)[m·d + n] = A[m, n]

    滿足 vec(AB) = (A⊗1)vec(B) 與 vec(BA) = (1⊗Aᵀ)vec(B)。
    """
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"vectorize 需要方陣，得到形狀 {arr.shape}")
    return np.array(arr, dtype=complex).reshape(-1)


def unvectorize(v):
    vec = np.asarray(v)
    dim = int(round(np.sqrt(vec.size)))
    if dim * dim != vec.size:
        raise ValueError(f"長度 {vec.size} 不是平方數")
    return np.array(vec, dtype=complex).reshape(dim, dim)


def identity_vector(dim):
    """⟨⟨1| 作為列向量使用：⟨⟨1|x = tr(unvec(x))"""
    return vectorize(np.eye(dim))


# ===== 分數冪與 s 內積 =====

def _matrix(a):
    if isinstance(a, (DensityOperator, HermitianOperator)):
        return a.entries
    return np.asarray(a)


def matrix_power_hermitian(a, p, rank_tol=None):
    """以 Hermitian 特徵分解計算 A^p；特徵值低於 rank_tol 時拋出秩錯誤"""
    tol = Config.RANK_TOL if rank_tol is None else rank_tol
    arr = _matrix(a)
    w, v = la.eigh((arr + dagger(arr)) / 2)
    if p == 0:
        return np.eye(arr.shape[0], dtype=complex)
    if w[0] <= tol:
        raise StationaryStateError(
            f"stationary state not full rank (最小特徵值 {w[0]:.3e} ≤ {tol:.1e})")
    return (v * w ** p) @ dagger(v)


def check_s(s):
    if float(s) not in ALLOWED_S:
        raise ValueError(f"s 必須是 0 或 1/2，得到 {s}")
    return float(s)


def inner_product_s(a, b, pi, s, rank_tol=None):
    """⟨A,B⟩_s = tr(A† π^s B π^{1−s})"""
    s = check_s(s)
    A, B, P = np.asarray(a), np.asarray(b), _matrix(pi)
    if A.shape != B.shape or A.shape != P.shape:
        raise ValueError("inner_product_s: 維度不符")
    left = matrix_power_hermitian(P, s, rank_tol)
    right = matrix_power_hermitian(P, 1.0 - s, rank_tol)
    return complex(np.trace(dagger(A) @ left @ B @ right))


def norm_s(a, pi, s, rank_tol=None):
    value = inner_product_s(a, a, pi, s, rank_tol)
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise NumericalConsistencyError(f"‖A‖_s² 虛部過大: {value.imag:.3e}")
    return float(np.sqrt(max(value.real, 0.0)))


def weight_matrix(pi, s, power=1.0, rank_tol=None):
    """W_s^power，其中 W_s = π^s ⊗ (π^{1−s})ᵀ 使 ⟨A,B⟩_s = vec(A)† W_s vec(B)"""
    s = check_s(s)
    left = matrix_power_hermitian(pi, s * power, rank_tol)
    right = matrix_power_hermitian(pi, (1.0 - s) * power, rank_tol)
    return np.kron(left, right.T)


def trace_distance(rho, sigma):
    diff = _matrix(rho) - _matrix(sigma)
    w = la.eigvalsh((diff + dagger(diff)) / 2)
    return float(0.5 * np.sum(np.abs(w)))


# ===== 模型檢查 =====

def validate_system(system, config=None):
    """檢查 H 的 Hermitian 殘差、配對殘差與通道編號

    Returns:
        ValidationReport: 所有殘差在容差內時 passed 為 True
    """
    config = config or Config()
    report = ValidationReport(passed=True,
                              hermiticity_residual=hermiticity_residual(system.hamiltonian.entries))

    if report.hermiticity_residual > config.HERMITICITY_TOL:
        report.failures.append(f"hamiltonian 殘差 {report.hermiticity_residual:.3e}")

    seen = set()
    for k in system.channel_ids:
        if k in seen and k not in report.duplicate_ids:
            report.duplicate_ids.append(k)
        seen.add(k)
    if report.duplicate_ids:
        report.failures.append(f"重複通道編號 {report.duplicate_ids}")

    if system.pairing is None:
        report.notes.append("no pairing; TKUR unavailable")
    elif not report.duplicate_ids:
        paired = set(system.pairing.channel_ids)
        if paired != seen:
            report.failures.append(f"配對通道 {sorted(paired)} 與系統通道 {sorted(seen)} 不一致")
        else:
            for k, k_star, ds in system.pairing.pairs:
                residual = la.norm(system.jump(k) - np.exp(ds / 2) * dagger(system.jump(k_star)))
                report.pairing_residuals[k] = float(residual)
                if residual >= config.PAIRING_TOL:
                    report.failures.append(f"配對殘差 L_{k}: {residual:.3e}")

    report.notes.extend(system.notes)
    report.passed = not report.failures
    if report.passed:
        logger.debug("✅ 模型檢查通過 (d=%d, 通道 %d)", system.dim, len(system.jumps))
    else:
        logger.warning("⚠️  模型檢查失敗: %s", '; '.join(report.failures))
    return report
