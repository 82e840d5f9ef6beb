import os

class Config:
    """系統配置類別"""

    # ===== 數值容差配置 =====
    HERMITICITY_TOL = 1e-12      # Hermitian 殘差（Frobenius，相對）
    TRACE_TOL = 1e-10            # 密度矩陣跡
    POSITIVITY_TOL = 1e-10       # 最小特徵值下限
    PAIRING_TOL = 1e-10          # 局部細緻平衡殘差
    RANK_TOL = 1e-12             # π 滿秩判斷
    KERNEL_TOL = 1e-8            # 穩態唯一性（第二小奇異值）
    GENERATOR_TOL = 1e-10        # ⟨⟨1|L̂ = 0 殘差
    GAP_ZERO_TOL = 1e-8          # 對稱化 Liouvillian λ₀ 殘差
    BOUND_REL_TOL = 1e-9         # 不等式相對鬆弛容差
    MEAN_TOL_FACTOR = 1e-12      # F_φ 定義門檻 = 係數 * a * τ
    VARIANCE_NEG_TOL = 1e-8      # 變異數負值容忍

    # ===== 全計數統計 (FCS) 配置 =====
    FCS_STEP = 1e-3              # u 方向中央差分步長
    FCS_RICHARDSON = 1           # Richardson 外插層數

    # ===== 響應梯度配置 =====
    RESPONSE_FD_STEP = 1e-5      # ω_k 有限差分步長
    RESPONSE_FD_RTOL = 1e-4      # 解析值與有限差分允許誤差

    # ===== 漸近變異率 Δ_P 配置 =====
    DELTA_P_TAU0 = 200.0
    DELTA_P_RTOL = 1e-3

    # ===== 量子跳躍蒙地卡羅配置 =====
    TRAJ_COARSE_STEPS = 64       # 每段粗時間格點數
    TRAJ_TIME_TOL = 1e-12        # 跳躍時間二分精度
    TRAJ_CHUNK = 256             # 每個工作單元的軌跡數
    TRAJ_Z_LIMIT = 4.0           # cmd_traj 的 |z| 門檻

    # ===== 三能階 maser 預設參數 =====
    MASER_GAMMA_H = 0.1
    MASER_GAMMA_C = 2.0
    MASER_N_H = 5.0
    MASER_N_C = 0.02
    MASER_OMEGA = 0.15
    MASER_DELTA = 1.0

    # ===== 掃描配置 =====
    SWEEP_PARAMETER = 'delta'
    SWEEP_START = 0.0
    SWEEP_STOP = 2.0
    SWEEP_POINTS = 21
    SWEEP_TAU = 10.0
    CYCLE_CURRENT = [1.0, -1.0, -1.0, 1.0]
    RESPONSE_SAMPLES = 100       # 每個格點的隨機計數向量數
    DEFAULT_SEED = 2024
    FLOAT_DIGITS = 17            # CSV/JSON 浮點有效位數

    # ===== 數據儲存配置 =====
    DATA_DIR = 'data'
    OUTPUT_DIR = os.path.join(DATA_DIR, 'output')
    TRAJECTORY_DIR = os.path.join(DATA_DIR, 'trajectories')

    # ===== 執行緒配置 =====
    THREADS_ENV = 'QTRAJ_THREADS'
    DEFAULT_THREADS = 1

    @staticmethod
    def worker_count():
        """讀取執行緒數量（只有這一項可由環境變數覆寫）"""
        value = os.environ.get(Config.THREADS_ENV, '')
        try:
            count = int(value)
        except ValueError:
            return Config.DEFAULT_THREADS
        return max(1, count)

    @staticmethod
    def init_directories():
        """初始化所有必要的輸出目錄"""
        dirs = [
            Config.DATA_DIR,
            Config.OUTPUT_DIR,
            Config.TRAJECTORY_DIR,
        ]
        for directory in dirs:
            os.makedirs(directory, exist_ok=True)
