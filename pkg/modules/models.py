"""
模型模組 - 三能階 maser、古典馬可夫鏈嵌入與模型檔案讀寫
"""

import json
import logging
import os
from dataclasses import dataclass, fields, replace
from itertools import product

import numpy as np
import scipy.linalg as la
from scipy.sparse.csgraph import connected_components

from config import Config
from modules.core import (
    CountingVector, DetailedBalancePairing, HermitianOperator, JumpOperator, OpenSystem,
    QuantumModelError,
)

# 設置日誌
logger = logging.getLogger(__name__)

MODEL_FORMAT = 1
MASER_CHANNELS = (1, 2, 3, 4)        # (1, 1*, 2, 2*)


def bose_occupation(omega, temperature):
    """n = 1/(e^{ω/T} − 1)"""
    if temperature <= 0:
        return 0.0
    return float(1.0 / np.expm1(omega / temperature))


def bath_temperature(omega, occupation):
    """bose_occupation 的反函數 T = ω / ln(1 + 1/n)"""
    if occupation <= 0:
        raise ValueError("佔據數必須 > 0 才能定義溫度")
    return float(omega / np.log1p(1.0 / occupation))


# ===== 三能階 maser =====

@dataclass(frozen=True)
class MaserParams:
    gamma_h: float = Config.MASER_GAMMA_H
    gamma_c: float = Config.MASER_GAMMA_C
    n_h: float = Config.MASER_N_H
    n_c: float = Config.MASER_N_C
    omega: float = Config.MASER_OMEGA
    delta: float = Config.MASER_DELTA

    def __post_init__(self):
        for name in ('gamma_h', 'gamma_c', 'n_h', 'n_c'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise QuantumModelError(f"maser.{name}: 必須是有限且 ≥ 0 的數，得到 {value}")
        for name in ('omega', 'delta'):
            if not np.isfinite(getattr(self, name)):
                raise QuantumModelError(f"maser.{name}: 非有限值")

    @classmethod
    def from_temperatures(cls, omega_h, omega_c, temp_h, temp_c, **kwargs):
        return cls(n_h=bose_occupation(omega_h, temp_h), n_c=bose_occupation(omega_c, temp_c), **kwargs)

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in fields(cls))

    def with_value(self, name, value):
        if name not in self.field_names():
            raise ValueError(f"未知 maser 參數: {name}")
        return replace(self, **{name: float(value)})


def _sigma(m, n, dim=3):
    op = np.zeros((dim, dim), dtype=complex)
    op[m - 1, n - 1] = 1.0
    return op


def build_maser(params=None):
    """旋轉座標系下的三能階 maser

    H = −Δσ₂₂ + Ω(σ₁₂ + σ₂₁)，通道順序 (1, 1*, 2, 2*)：
    L₁ = √(γ_h n_h)σ₃₁, L₁* = √(γ_h(n_h+1))σ₁₃, L₂ = √(γ_c n_c)σ₃₂, L₂* = √(γ_c(n_c+1))σ₂₃。
    佔據數為零的吸收通道會被移除，此時系統不帶配對。
    """
    p = params or MaserParams()
    hamiltonian = -p.delta * _sigma(2, 2) + p.omega * (_sigma(1, 2) + _sigma(2, 1))

    candidates = [
        (1, p.gamma_h * p.n_h, _sigma(3, 1)),
        (2, p.gamma_h * (p.n_h + 1), _sigma(1, 3)),
        (3, p.gamma_c * p.n_c, _sigma(3, 2)),
        (4, p.gamma_c * (p.n_c + 1), _sigma(2, 3)),
    ]
    jumps = [JumpOperator(np.sqrt(rate) * op, k) for k, rate, op in candidates if rate > 0]
    dead = [k for k, rate, _ in candidates if rate <= 0]

    pairing, notes = None, []
    if not dead:
        ds_hot = float(np.log(p.n_h / (p.n_h + 1)))
        ds_cold = float(np.log(p.n_c / (p.n_c + 1)))
        pairing = DetailedBalancePairing.from_pairs([(1, 2, ds_hot), (3, 4, ds_cold)])
    else:
        notes.append(f"dead channels {dead} dropped; pairing unavailable")
        logger.warning("⚠️  maser 通道 %s 速率為零，已移除並停用配對", dead)

    return OpenSystem(HermitianOperator(hamiltonian), tuple(jumps), pairing, tuple(notes))


def cycle_current(system, values=None):
    values = Config.CYCLE_CURRENT if values is None else values
    table = dict(zip(MASER_CHANNELS, values))
    return CountingVector({k: table[k] for k in system.channel_ids})


def maser_heat_vectors(omega_h, omega_c):
    """熱流計數向量：熱端吸收 +ω_h、放出 −ω_h；冷端放出 +ω_c、吸收 −ω_c"""
    hot = CountingVector({1: omega_h, 2: -omega_h, 3: 0.0, 4: 0.0})
    cold = CountingVector({1: 0.0, 2: 0.0, 3: -omega_c, 4: omega_c})
    return hot, cold


# ===== 通道縮放 =====

RATE_PREFIX = 'rate_'


def scale_channel(system, channel_id, factor):
    """L_k → √factor·L_k，配對的 Δs_k 平移 ln(factor)、Δs_k* 反向平移

    Raises:
        QuantumModelError: 通道不存在
        ValueError: factor 不是有限正數
    """
    factor = float(factor)
    if not np.isfinite(factor) or factor <= 0.0:
        raise ValueError(f"{RATE_PREFIX}{channel_id}: 縮放倍率必須是有限正數，得到 {factor}")
    if channel_id not in system.channel_ids:
        raise QuantumModelError(f"{RATE_PREFIX}{channel_id}: 模型沒有通道 {channel_id}")

    jumps = tuple(JumpOperator(np.sqrt(factor) * j.entries, j.channel_id) if j.channel_id == channel_id else j
                  for j in system.jumps)
    pairing = system.pairing
    if pairing is not None:
        shift = float(np.log(factor))
        pairs = []
        for k, k_star, ds in pairing.pairs:
            if k != k_star and k == channel_id:
                ds += shift
            elif k != k_star and k_star == channel_id:
                ds -= shift
            pairs.append((k, k_star, ds))
        pairing = DetailedBalancePairing(tuple(pairs))
    return replace(system, jumps=jumps, pairing=pairing)


def channel_rate_parameter(name):
    """'rate_<k>' → k；其他名稱傳回 None"""
    if not name.startswith(RATE_PREFIX):
        return None
    try:
        return int(name[len(RATE_PREFIX):])
    except ValueError:
        return None


# ===== 古典馬可夫鏈 =====

@dataclass(frozen=True)
class ClassicalChain:
    """rates[m, n] 為 n → m 的躍遷率，對角線忽略"""
    rates: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rates, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise QuantumModelError(f"chain.rates: 需要 d×d (d ≥ 2) 矩陣，得到 {arr.shape}")
        np.fill_diagonal(arr, 0.0)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise QuantumModelError("chain.rates: 躍遷率必須有限且 ≥ 0")
        arr.setflags(write=False)
        object.__setattr__(self, 'rates', arr)

    @property
    def dim(self):
        return self.rates.shape[0]

    @property
    def edges(self):
        """有向邊 (m, n)（n → m），依 (m, n) 字典序"""
        return [(m, n) for m, n in product(range(self.dim), repeat=2) if m != n and self.rates[m, n] > 0]

    def generator(self):
        q = np.array(self.rates)
        q -= np.diag(q.sum(axis=0))
        return q

    def is_irreducible(self):
        count, _ = connected_components(self.rates > 0, directed=True, connection='strong')
        return count == 1

    def require_irreducible(self):
        if not self.is_irreducible():
            raise QuantumModelError("reducible chain: 穩態分布不唯一")


def embed_classical(chain, pairing=True):
    """H = 0、每條有向邊一個通道 L = √w_mn |m⟩⟨n|

    配對 (mn) ↔ (nm) 的 Δs = ln(w_mn/w_nm)，由 L_k = e^{Δs_k/2}L_{k*}† 唯一決定。

    Returns:
        tuple: (OpenSystem, {邊 (m, n): 通道編號})
    """
    chain.require_irreducible()
    dim = chain.dim
    channel_map = {edge: index + 1 for index, edge in enumerate(chain.edges)}
    jumps = []
    for (m, n), k in channel_map.items():
        op = np.zeros((dim, dim), dtype=complex)
        op[m, n] = np.sqrt(chain.rates[m, n])
        jumps.append(JumpOperator(op, k))

    detailed = None
    if pairing:
        one_way = []
        for (m, n), k in channel_map.items():
            if (n, m) not in channel_map:
                raise QuantumModelError(f"邊 {n}→{m} 有速率但反向 {m}→{n} 為零，無法滿足局部細緻平衡")
            if m < n:
                one_way.append((k, channel_map[(n, m)], float(np.log(chain.rates[m, n] / chain.rates[n, m]))))
        detailed = DetailedBalancePairing.from_pairs(one_way)

    system = OpenSystem(HermitianOperator(np.zeros((dim, dim))), tuple(jumps), detailed)
    return system, channel_map


def random_chain(dim, rng, rate_range=(0.1, 2.0)):
    low, high = rate_range
    rates = rng.uniform(low, high, size=(dim, dim))
    np.fill_diagonal(rates, 0.0)
    return ClassicalChain(rates)


def classical_engine(omega_h=1.0, omega_c=0.5, temp_h=2.0, temp_c=0.2, work_rate=1.0):
    """三狀態古典熱機：熱邊 1↔3、冷邊 2↔3、對稱工作邊 1↔2（狀態編號 0, 1, 2）

    Returns:
        tuple: (ClassicalChain, 熱端溫度, 冷端溫度, 熱端與冷端每次跳躍的能量量子)
    """
    rates = np.zeros((3, 3))
    rates[2, 0] = bose_occupation(omega_h, temp_h)
    rates[0, 2] = bose_occupation(omega_h, temp_h) + 1
    rates[2, 1] = bose_occupation(omega_c, temp_c)
    rates[1, 2] = bose_occupation(omega_c, temp_c) + 1
    rates[0, 1] = rates[1, 0] = work_rate
    return ClassicalChain(rates), temp_h, temp_c, (omega_h, omega_c)


def classical_heat_vectors(channel_map, omega_h, omega_c):
    """古典熱機的熱流計數向量：熱端 0→2 吸收 +ω_h；冷端 2→1 放出 +ω_c"""
    hot, cold = {}, {}
    for (m, n), k in channel_map.items():
        hot[k] = omega_h if (m, n) == (2, 0) else (-omega_h if (m, n) == (0, 2) else 0.0)
        cold[k] = omega_c if (m, n) == (1, 2) else (-omega_c if (m, n) == (2, 1) else 0.0)
    return CountingVector(hot), CountingVector(cold)


@dataclass
class ClassicalReference:
    distribution: np.ndarray
    activity: float
    entropy_production: float
    mean: float
    variance: float


def classical_reference(chain, edge_weights, tau):
    """獨立的古典馬可夫跳躍公式

    Args:
        edge_weights: {(m, n): c}，未列出的邊權重為 0
    """
    chain.require_irreducible()
    w = chain.rates
    q = chain.generator()
    kernel = la.null_space(q)
    p = np.real(kernel[:, 0])
    p = p / p.sum()

    flux = w * p[np.newaxis, :]
    activity = float(flux.sum())
    sigma = 0.0
    for m, n in chain.edges:
        sigma += flux[m, n] * np.log(w[m, n] / w[n, m]) if w[n, m] > 0 else 0.0

    c = np.zeros_like(w)
    for (m, n), value in edge_weights.items():
        c[m, n] = value
    weighted = c * w
    mean = tau * float((c * flux).sum())

    # 二階矩：τ Σ c² w p + 2·1ᵀ C K₂ C p，K₂ 由 Q 的特徵分解計算
    values, vectors = la.eig(q)
    with np.errstate(divide='ignore', invalid='ignore'):
        k2 = np.where(np.abs(values) > 1e-12,
                      (np.exp(values * tau) - 1 - values * tau) / values ** 2, tau ** 2 / 2)
    k2_matrix = vectors @ np.diag(k2) @ la.inv(vectors)
    second = tau * float((c ** 2 * flux).sum()) + 2 * np.real(
        np.ones(chain.dim) @ weighted @ k2_matrix @ (weighted @ p))
    return ClassicalReference(distribution=p, activity=activity, entropy_production=float(sigma),
                              mean=mean, variance=float(second - mean ** 2))


# ===== 模型檔案 =====

class ModelFileError(QuantumModelError):
    """模型檔案格式或內容錯誤，訊息包含欄位路徑或行號"""


def _encode_matrix(matrix):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def _decode_matrix(data, path, dim):
    try:
        arr = np.array([[complex(entry[0], entry[1]) for entry in row] for row in data], dtype=complex)
    except (TypeError, IndexError, ValueError) as exc:
        raise ModelFileError(f"{path}: 需要 [[re, im], ...] 形式的矩陣 ({exc})") from exc
    if arr.shape != (dim, dim):
        raise ModelFileError(f"{path}: 形狀 {arr.shape} 與 dim={dim} 不符")
    return arr


def system_to_dict(system):
    return {
        'format': MODEL_FORMAT,
        'dim': system.dim,
        'hamiltonian': _encode_matrix(system.hamiltonian.entries),
        'jumps': [{'id': j.channel_id, 'matrix': _encode_matrix(j.entries)} for j in system.jumps],
        'pairing': None if system.pairing is None else [
            {'k': k, 'k_star': k_star, 'ds': ds} for k, k_star, ds in system.pairing.pairs],
    }


def system_from_dict(data):
    if not isinstance(data, dict):
        raise ModelFileError("<root>: 需要 JSON 物件")
    if data.get('format') != MODEL_FORMAT:
        raise ModelFileError(f"format: 只支援 {MODEL_FORMAT}，得到 {data.get('format')!r}")
    dim = data.get('dim')
    if not isinstance(dim, int) or dim < 2:
        raise ModelFileError(f"dim: 需要 ≥ 2 的整數，得到 {dim!r}")

    try:
        hamiltonian = HermitianOperator(_decode_matrix(data.get('hamiltonian'), 'hamiltonian', dim))
    except ModelFileError:
        raise
    except QuantumModelError as exc:
        raise ModelFileError(f"hamiltonian: {exc}") from exc

    jumps_data = data.get('jumps')
    if not isinstance(jumps_data, list) or not jumps_data:
        raise ModelFileError("jumps: 需要非空列表")
    jumps = []
    for index, entry in enumerate(jumps_data):
        path = f"jumps[{index}]"
        if not isinstance(entry, dict) or 'id' not in entry or 'matrix' not in entry:
            raise ModelFileError(f"{path}: 需要 {{id, matrix}}")
        try:
            jumps.append(JumpOperator(_decode_matrix(entry['matrix'], f"{path}.matrix", dim), entry['id']))
        except ModelFileError:
            raise
        except (QuantumModelError, TypeError, ValueError) as exc:
            raise ModelFileError(f"{path}: {exc}") from exc

    pairing = None
    if data.get('pairing') is not None:
        try:
            pairing = DetailedBalancePairing(tuple(
                (item['k'], item['k_star'], item['ds']) for item in data['pairing']))
        except (KeyError, TypeError) as exc:
            raise ModelFileError(f"pairing: 需要 [{{k, k_star, ds}}, ...] ({exc})") from exc
        except QuantumModelError as exc:
            raise ModelFileError(str(exc)) from exc

    return OpenSystem(hamiltonian, tuple(jumps), pairing)


def save_model(path, system):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(system_to_dict(system), handle, indent=2)
        handle.write('\n')
    logger.info("💾 模型已儲存: %s", path)


def load_model(path):
    """讀取 format 1 的 JSON 模型檔

    Raises:
        ModelFileError: JSON 語法錯誤（附行號）或欄位不合法（附欄位路徑）
    """
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: JSON 錯誤於第 {exc.lineno} 行第 {exc.colno} 欄: {exc.msg}") from exc
    except OSError as exc:
        raise ModelFileError(f"{path}: 無法讀取 ({exc})") from exc
    system = system_from_dict(data)
    logger.info("📂 已載入模型 %s (d=%d, %d 個通道)", path, system.dim, len(system.jumps))
    return system
