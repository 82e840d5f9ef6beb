"""
量子跳躍軌跡模組 - GKSL 動力學的蒙地卡羅展開
以等待時間法取樣跳躍事件，作為計數觀測量統計的獨立驗證
"""

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import scipy.linalg as la

from config import Config
from modules.core import NumericalConsistencyError, dagger
from modules.liouvillian import build_generator, stationary_state
from modules.statistics import ObservableStats

# 設置日誌
logger = logging.getLogger(__name__)


@dataclass
class TrajectoryRecord:
    events: List[Tuple[float, int]]
    phi: float
    state: np.ndarray

    @property
    def jump_count(self):
        return len(self.events)


@dataclass
class MomentAccumulator:
    """可結合的一到四階中心矩累加器（Welford / Chan 合併）"""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    def push(self, x):
        self.merge(MomentAccumulator(count=1, mean=float(x)))

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2, self.m3, self.m4 = (
                other.count, other.mean, other.m2, other.m3, other.m4)
            return self
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        m2 = self.m2 + other.m2 + delta ** 2 * na * nb / n
        m3 = (self.m3 + other.m3 + delta ** 3 * na * nb * (na - nb) / n ** 2
              + 3 * delta * (na * other.m2 - nb * self.m2) / n)
        m4 = (self.m4 + other.m4
              + delta ** 4 * na * nb * (na * na - na * nb + nb * nb) / n ** 3
              + 6 * delta ** 2 * (na * na * other.m2 + nb * nb * self.m2) / n ** 2
              + 4 * delta * (na * other.m3 - nb * self.m3) / n)
        self.count, self.mean, self.m2, self.m3, self.m4 = n, self.mean + delta * nb / n, m2, m3, m4
        return self

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def variance_se(self):
        """樣本變異數的標準誤 √((μ₄ − σ⁴(n−3)/(n−1))/n)"""
        n = self.count
        if n < 2:
            return float('inf')
        var = self.variance
        mu4 = self.m4 / n
        value = (mu4 - var ** 2 * (n - 3) / (n - 1)) / n
        return math.sqrt(max(value, 0.0))


@dataclass
class EnsembleEstimate:
    n: int
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    seed: int
    tau: float
    channel_counts: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("N 必須 ≥ 2")

    @property
    def jump_rate(self):
        """每單位時間的平均跳躍數，估計動態活性 a"""
        return sum(self.channel_counts.values()) / (self.n * self.tau)

    def to_stats(self):
        return ObservableStats(mean=self.mean, variance=self.variance, tau=self.tau,
                               method='monte_carlo', mean_se=self.mean_se,
                               variance_se=self.variance_se)

    def to_dict(self):
        return {
            'n': self.n, 'seed': self.seed, 'tau': self.tau,
            'mean': self.mean, 'variance': self.variance,
            'mean_se': self.mean_se, 'variance_se': self.variance_se,
            'channel_counts': {str(k): v for k, v in sorted(self.channel_counts.items())},
        }


def trajectory_rng(seed, index):
    """計數器式亂數流，由 (seed, 軌跡編號) 決定"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def effective_hamiltonian(system):
    """H_eff = H − (i/2) Σ_k L_k†L_k"""
    h_eff = np.array(system.hamiltonian.entries, dtype=complex)
    for jump in system.jumps:
        h_eff = h_eff - 0.5j * dagger(jump.entries) @ jump.entries
    return h_eff


def kraus_operators(system, dt):
    """一階 Kraus 算子 M₀ = 1 − iH_eff dt、M_k = √dt L_k；完備性殘差為 O(dt²)"""
    m0 = np.eye(system.dim) - 1j * effective_hamiltonian(system) * dt
    return [m0] + [np.sqrt(dt) * jump.entries for jump in system.jumps]


class JumpSampler:
    """固定系統與時間長度的等待時間取樣器

    預先計算 U_j = exp(−iH_eff·dt/2^j)，粗步長前進，
    範數跌破亂數 r 時以二分細化定位跳躍時間。
    """

    def __init__(self, system, tau, config=None):
        self.config = config or Config()
        if tau < 0:
            raise ValueError(f"τ 必須 ≥ 0，得到 {tau}")
        self.system = system
        self.tau = float(tau)
        self.h_eff = effective_hamiltonian(system)
        self.jumps = [(j.channel_id, j.entries) for j in system.jumps]

        self.dt = self.tau / self.config.TRAJ_COARSE_STEPS if self.tau > 0 else 0.0
        levels = 0
        if self.dt > 0:
            levels = max(1, math.ceil(math.log2(self.dt / self.config.TRAJ_TIME_TOL)))
        self.levels = min(levels, 60)
        self.steps = [la.expm(-1j * self.h_eff * self.dt / 2 ** j) for j in range(self.levels + 1)]

    def _propagate(self, psi, time):
        return la.expm(-1j * self.h_eff * time) @ psi

    def _advance(self, psi, step, previous):
        candidate = step @ psi
        norm2 = float(np.vdot(candidate, candidate).real)
        if norm2 > previous * (1 + 1e-10) + 1e-15:
            raise NumericalConsistencyError("軌跡範數增加：H_eff 建構錯誤")
        return candidate, norm2

    def _refine(self, psi, t, norm2, threshold):
        """在已知包含跳躍的粗區間內以二分步長逼近跳躍時間"""
        for j in range(1, self.levels + 1):
            candidate, cand_norm = self._advance(psi, self.steps[j], norm2)
            if cand_norm >= threshold:
                psi, norm2 = candidate, cand_norm
                t += self.dt / 2 ** j
        return psi, t

    def sample(self, psi0, rng, weights=None):
        """取樣一條軌跡

        Args:
            psi0: 初始純態（會被正規化）
            rng: numpy Generator
            weights: {k: c_k}，用於累計 φ；None 表示 φ = 0

        Returns:
            TrajectoryRecord
        """
        psi = np.array(psi0, dtype=complex)
        norm0 = la.norm(psi)
        if abs(norm0 - 1.0) > 1e-10:
            raise ValueError(f"初始態未正規化 (‖ψ‖ = {norm0:.12f})")

        weights = weights or {}
        events, phi = [], 0.0
        t, norm2 = 0.0, 1.0
        threshold = rng.uniform()

        while t < self.tau:
            jumped = False
            while t + self.dt <= self.tau:
                candidate, cand_norm = self._advance(psi, self.steps[0], norm2)
                if cand_norm < threshold:
                    jumped = True
                    break
                psi, norm2, t = candidate, cand_norm, t + self.dt

            if not jumped:
                remaining = self.tau - t
                if remaining <= 0.0:
                    break
                candidate = self._propagate(psi, remaining)
                cand_norm = float(np.vdot(candidate, candidate).real)
                if cand_norm >= threshold:
                    psi, norm2, t = candidate, cand_norm, self.tau
                    break

            psi, t = self._refine(psi, t, norm2, threshold)
            if events and t <= events[-1][0]:
                # 同一個二分格內的第二次跳躍
                t = float(np.nextafter(events[-1][0], np.inf))
            probabilities = np.array([float(np.vdot(op @ psi, op @ psi).real) for _, op in self.jumps])
            total = probabilities.sum()
            if total <= 0.0:
                raise NumericalConsistencyError("範數衰減但沒有可用的跳躍通道")
            index = rng.choice(len(self.jumps), p=probabilities / total)
            channel, op = self.jumps[index]
            psi = op @ psi
            psi = psi / la.norm(psi)
            norm2 = 1.0
            events.append((t, channel))
            phi += weights.get(channel, 0.0)
            threshold = rng.uniform()

        state = psi / la.norm(psi)
        return TrajectoryRecord(events=events, phi=phi, state=state)


def sample_trajectory(system, psi0, tau, rng, counting=None, config=None):
    sampler = JumpSampler(system, tau, config)
    weights = dict(counting.weights) if counting is not None else None
    return sampler.sample(psi0, rng, weights)


def _initial_state(rng, eigenvalues, eigenvectors):
    p = np.clip(eigenvalues, 0.0, None)
    index = rng.choice(len(p), p=p / p.sum())
    return eigenvectors[:, index]


def _stationary_mixture(system, config):
    pi = stationary_state(build_generator(system, config), config)
    return la.eigh(pi.entries)


def _run_chunk(sampler, weights, seed, start, stop, mixture, initial):
    acc = MomentAccumulator()
    counts = {}
    for index in range(start, stop):
        rng = trajectory_rng(seed, index)
        psi0 = initial if initial is not None else _initial_state(rng, *mixture)
        record = sampler.sample(psi0, rng, weights)
        acc.push(record.phi)
        for _, channel in record.events:
            counts[channel] = counts.get(channel, 0) + 1
    return acc, counts


def estimate_moments(system, counting, tau, n, seed, config=None, threads=None, initial=None):
    """以 N 條軌跡估計 φ 的平均與變異數

    初始態預設從穩態 π 的特徵分解取樣；結果只依賴 seed，與執行緒數無關。
    """
    config = config or Config()
    if n < 2:
        raise ValueError("N 必須 ≥ 2")
    threads = threads or config.worker_count()
    sampler = JumpSampler(system, tau, config)
    weights = dict(counting.weights) if counting is not None else {}
    mixture = None if initial is not None else _stationary_mixture(system, config)

    chunks = [(start, min(start + config.TRAJ_CHUNK, n)) for start in range(0, n, config.TRAJ_CHUNK)]
    logger.info("蒙地卡羅: N=%d, τ=%g, %d 個區塊, %d 執行緒", n, tau, len(chunks), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(
            lambda bounds: _run_chunk(sampler, weights, seed, bounds[0], bounds[1], mixture, initial),
            chunks))

    total = MomentAccumulator()
    counts = {k: 0 for k in system.channel_ids}
    for acc, chunk_counts in results:
        total.merge(acc)
        for k, v in chunk_counts.items():
            counts[k] += v

    variance = total.variance
    return EnsembleEstimate(n=n, mean=total.mean, variance=variance,
                            mean_se=math.sqrt(variance / n), variance_se=total.variance_se,
                            seed=int(seed), tau=float(tau), channel_counts=counts)


def ensemble_density(system, tau, n, seed, psi0=None, config=None):
    """N 條軌跡末態 |ψ_τ⟩⟨ψ_τ| 的平均，收斂到 e^{Lτ}(ϱ₀)"""
    config = config or Config()
    sampler = JumpSampler(system, tau, config)
    mixture = None if psi0 is not None else _stationary_mixture(system, config)
    rho = np.zeros((system.dim, system.dim), dtype=complex)
    for index in range(n):
        rng = trajectory_rng(seed, index)
        start = psi0 if psi0 is not None else _initial_state(rng, *mixture)
        state = sampler.sample(start, rng).state
        rho += np.outer(state, state.conj())
    return rho / n


def sample_records(system, counting, tau, n, seed, config=None):
    """前 n 條軌跡的完整紀錄，與 estimate_moments 使用相同的 RNG 串流"""
    config = config or Config()
    sampler = JumpSampler(system, tau, config)
    weights = dict(counting.weights) if counting is not None else None
    mixture = _stationary_mixture(system, config)
    records = []
    for index in range(n):
        rng = trajectory_rng(seed, index)
        records.append(sampler.sample(_initial_state(rng, *mixture), rng, weights))
    return records


def write_trajectory_dump(path, records, header):
    """每個事件一行 `time,channel`；檔頭以 # 註解記錄 seed 與參數"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        for key, value in sorted(header.items()):
            handle.write(f"# {key}={value}\n")
        writer = csv.writer(handle)
        writer.writerow(['time', 'channel'])
        for index, record in enumerate(records):
            handle.write(f"# trajectory={index}\n")
            for time, channel in record.events:
                writer.writerow([repr(float(time)), channel])
    logger.info("💾 軌跡已寫入: %s", path)
