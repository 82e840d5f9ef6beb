"""
命令列介面 - 參數掃描、不等式驗證報告、蒙地卡羅與古典極限驗證
子命令: sweep, bounds, traj, verify-classical
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from config import Config
from modules.bounds import (
    BoundReport, check_iur, check_iur_variance, check_kur, check_kur_response,
    check_power_efficiency, check_rkur, check_tkur, check_tkur_classical_form, check_tur,
    delta_phi, response_gradient, symmetrized_gap,
)
from modules.core import (
    CountingVector, NumericalConsistencyError, QuantumModelError, StationaryStateError,
)
from modules.liouvillian import LiouvillianBundle
from modules.models import (
    MASER_CHANNELS, RATE_PREFIX, MaserParams, bath_temperature, build_maser, channel_rate_parameter,
    classical_reference, cycle_current, embed_classical, load_model, maser_heat_vectors, random_chain,
    scale_channel,
)
from modules.statistics import (
    channel_traffic, entropy_production_rate, mean_observable, mean_tolerance, observable_stats,
    variance_exact,
)
from modules.trajectories import estimate_moments, sample_records, write_trajectory_dump

# 設置日誌
logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    'mean', 'variance', 'F', 'sigma', 'activity', 'delta_phi_finite', 'delta_phi_asymptotic',
    'g0', 'g05', 'tkur_lhs', 'tkur_rhs', 'tkur_classical_violation', 'iur_rhs_s0', 'iur_rhs_s05',
    'rkur_lhs', 'rkur_rhs', 'tkur_satisfied', 'iur_s0_satisfied', 'iur_s05_satisfied', 'rkur_satisfied',
)
SWEEP_BOUNDS = ('tkur', 'iur', 'rkur')
# 欄位所屬的不等式；未列出的欄位永遠輸出
COLUMN_BOUND = {
    'delta_phi_finite': 'tkur', 'delta_phi_asymptotic': 'tkur', 'tkur_lhs': 'tkur', 'tkur_rhs': 'tkur',
    'tkur_classical_violation': 'tkur', 'tkur_satisfied': 'tkur',
    'g0': 'iur', 'g05': 'iur', 'iur_rhs_s0': 'iur', 'iur_rhs_s05': 'iur',
    'iur_s0_satisfied': 'iur', 'iur_s05_satisfied': 'iur',
    'rkur_lhs': 'rkur', 'rkur_rhs': 'rkur', 'rkur_satisfied': 'rkur',
}
FLAG_COLUMNS = ('tkur_satisfied', 'iur_s0_satisfied', 'iur_s05_satisfied', 'rkur_satisfied')
RESPONSE_COLUMNS = ('sample', 'lhs', 'rhs', 'satisfied')


def sweep_columns(bounds):
    return tuple(c for c in SWEEP_COLUMNS if COLUMN_BOUND.get(c) in (None,) + tuple(bounds))


def format_value(value, digits=Config.FLOAT_DIGITS):
    """None 代表不適用，輸出空白欄位"""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{digits}g}"


def parse_vector(text):
    try:
        return [float(x) for x in text.split(',') if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"無法解析向量 '{text}'") from exc


def parse_names(text):
    return [x.strip() for x in text.split(',') if x.strip()]


@dataclass
class SweepSpec:
    """掃描設定

    model 為 None 時掃描內建 maser 的欄位 (gamma_h, delta, ...)；
    指定 JSON 模型檔時只能掃描 rate_<k>，即通道 k 速率的倍率。
    """
    parameter: str = Config.SWEEP_PARAMETER
    start: float = Config.SWEEP_START
    stop: float = Config.SWEEP_STOP
    points: int = Config.SWEEP_POINTS
    tau: float = Config.SWEEP_TAU
    counting: Optional[List[float]] = None
    model: Optional[str] = None
    bounds: Sequence[str] = SWEEP_BOUNDS
    base: MaserParams = field(default_factory=MaserParams)
    seed: int = Config.DEFAULT_SEED
    response_samples: int = 0
    output: Optional[str] = None
    response_output: Optional[str] = None

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("grid count 必須 ≥ 1")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("掃描範圍必須有限")
        if self.model is None and self.parameter not in MaserParams.field_names():
            raise ValueError(f"無法掃描參數 '{self.parameter}'，可用: {', '.join(MaserParams.field_names())}")
        if self.tau <= 0:
            raise ValueError("τ 必須 > 0")
        self.bounds = tuple(self.bounds)
        unknown = [b for b in self.bounds if b not in SWEEP_BOUNDS]
        if unknown or not self.bounds:
            raise ValueError(f"不等式清單 {list(self.bounds)} 不合法，可用: {', '.join(SWEEP_BOUNDS)}")

    def grid(self):
        if self.points == 1:
            return [float(self.start)]
        return [float(x) for x in np.linspace(self.start, self.stop, self.points)]

    def system_factory(self):
        """傳回 value → OpenSystem

        Raises:
            QuantumModelError: 模型檔搭配 maser 專用參數，或通道不存在
        """
        if self.model is None:
            return lambda value: build_maser(self.base.with_value(self.parameter, value))
        system = load_model(self.model)
        channel = channel_rate_parameter(self.parameter)
        if channel is None:
            raise QuantumModelError(
                f"參數 '{self.parameter}' 只適用內建 maser；模型檔請掃描 {RATE_PREFIX}<通道編號>")
        if channel not in system.channel_ids:
            raise QuantumModelError(f"{self.parameter}: 模型沒有通道 {channel}")
        return lambda value: scale_channel(system, channel, value)


# ===== 適用性 =====

def tkur_reports(bundle, counting, tau, delta_override=None):
    """(tkur, tkur_classical_form)；缺少配對或不是 current 時兩者皆為 inapplicable"""
    if bundle.system.pairing is None:
        reason = 'no pairing'
    elif not counting.is_current(bundle.system):
        reason = 'counting vector is not a current'
    else:
        return (check_tkur(bundle, counting, tau, delta_override=delta_override),
                check_tkur_classical_form(bundle, counting, tau))
    return BoundReport.inapplicable('tkur', reason), BoundReport.inapplicable('tkur_classical_form', reason)


def iur_report(bundle, counting, tau, s):
    if not bundle.full_rank:
        return BoundReport.inapplicable('iur', 'stationary state not full rank', {'s': s})
    if abs(mean_observable(bundle, counting, tau)) <= mean_tolerance(bundle, tau):
        return BoundReport.inapplicable('iur', 'zero mean rate', {'s': s})
    return check_iur(bundle, counting, tau, s)


def rkur_report(bundle, counting, tau, gradient=None):
    if variance_exact(bundle, counting, tau) <= 0.0:
        return BoundReport.inapplicable('rkur', 'zero variance')
    return check_rkur(bundle, counting, tau, gradient)


def _sides(report):
    if not report.applicable:
        return None, None, None
    return report.lhs, report.rhs, bool(report.satisfied)


# ===== 掃描 =====

def evaluate_point(system, spec, config):
    """單一格點的完整數列；所有數值都直接來自模組函式，不適用的量為 None"""
    bundle = LiouvillianBundle(system, config)
    counting = _counting_from_args(system, spec.counting)
    tau = spec.tau
    stats = observable_stats(bundle, counting, tau, 'exact_integral')
    _, activity = channel_traffic(bundle)

    row = {c: None for c in SWEEP_COLUMNS}
    row.update({
        'mean': stats.mean,
        'variance': stats.variance,
        'F': stats.relative_fluctuation,
        'sigma': entropy_production_rate(bundle) if system.pairing is not None else None,
        'activity': activity,
    })

    if 'tkur' in spec.bounds:
        tkur, classical = tkur_reports(bundle, counting, tau)
        row['tkur_lhs'], row['tkur_rhs'], row['tkur_satisfied'] = _sides(tkur)
        if tkur.applicable:
            row['delta_phi_finite'] = tkur.components['delta_phi']
            row['delta_phi_asymptotic'] = delta_phi(bundle, counting, mode='asymptotic')
        if classical.applicable:
            row['tkur_classical_violation'] = not classical.satisfied

    if 'iur' in spec.bounds:
        for s, suffix in ((0.0, 's0'), (0.5, 's05')):
            _, row[f'iur_rhs_{suffix}'], row[f'iur_{suffix}_satisfied'] = _sides(iur_report(bundle, counting, tau, s))
            if bundle.full_rank:
                row['g0' if s == 0.0 else 'g05'] = symmetrized_gap(bundle, s).gap

    if 'rkur' in spec.bounds:
        row['rkur_lhs'], row['rkur_rhs'], row['rkur_satisfied'] = _sides(rkur_report(bundle, counting, tau))
    return bundle, row


def response_table(bundle, tau, samples, seed, index):
    """每個格點 samples 個隨機計數向量，元素均勻分布於 [−1, 1]"""
    rng = np.random.default_rng([int(seed), int(index)])
    rows = []
    for sample in range(samples):
        counting = CountingVector.from_sequence(bundle.system, rng.uniform(-1.0, 1.0, len(bundle.channel_ids)))
        lhs, rhs, satisfied = _sides(rkur_report(bundle, counting, tau, response_gradient(bundle, counting, tau)))
        rows.append({'sample': sample, 'lhs': lhs, 'rhs': rhs, 'satisfied': satisfied})
    return rows


def _write_csv(path, header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = buffer.getvalue()
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        logger.info("💾 已寫入 %s", path)
    else:
        sys.stdout.write(text)
    return text


def cmd_sweep(spec, config=None, threads=1):
    """依格點計算並輸出 CSV；輸出順序固定為格點順序

    只有 spec.bounds 選到的欄位會出現；不適用的格點留空且不影響結束碼。

    Returns:
        tuple: (結束碼, 主要 CSV 內容, 響應表 CSV 內容或 None)
    """
    config = config or Config()
    grid = spec.grid()
    make_system = spec.system_factory()
    columns = sweep_columns(spec.bounds)

    def work(item):
        index, value = item
        bundle, row = evaluate_point(make_system(value), spec, config)
        responses = response_table(bundle, spec.tau, spec.response_samples, spec.seed, index) \
            if spec.response_samples else []
        logger.debug("格點 %d (%s=%g) 完成", index, spec.parameter, value)
        return row, responses

    logger.info("🔄 掃描 %s ∈ [%g, %g]，%d 點，τ=%g，不等式 %s",
                spec.parameter, spec.start, spec.stop, len(grid), spec.tau, ','.join(spec.bounds))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, enumerate(grid)))

    rows = [[value] + [row[c] for c in columns] for value, (row, _) in zip(grid, results)]
    text = _write_csv(spec.output, (spec.parameter,) + columns, rows)

    for index, (row, _) in enumerate(results):
        skipped = [c for c in columns if c in FLAG_COLUMNS and row[c] is None]
        if skipped:
            logger.warning("⚠️  格點 %d 不適用: %s", index, ', '.join(skipped))

    response_text = None
    failed = [c for c in columns if c in FLAG_COLUMNS and any(row[c] is False for row, _ in results)]
    if spec.response_samples:
        response_rows = [[value] + [r[c] for c in RESPONSE_COLUMNS]
                         for value, (_, responses) in zip(grid, results) for r in responses]
        response_text = _write_csv(spec.response_output or os.path.join(config.OUTPUT_DIR, 'response.csv'),
                                   (spec.parameter,) + RESPONSE_COLUMNS, response_rows)
        if any(r['satisfied'] is False for _, responses in results for r in responses):
            failed.append('rkur_random')

    for name in failed:
        logger.error("❌ bound failed: %s", name)
    if not failed:
        logger.info("✅ 所有適用格點的不等式皆成立")
    return (1 if failed else 0), text, response_text


# ===== 單點報告 =====

def _model_from_args(args):
    if getattr(args, 'config', None):
        return load_model(args.config), None
    params = MaserParams(gamma_h=args.gamma_h, gamma_c=args.gamma_c, n_h=args.n_h, n_c=args.n_c,
                         omega=args.omega, delta=args.delta)
    return build_maser(params), params


def _counting_from_args(system, values):
    """未指定時：完整 maser 用循環電流，其他模型每個通道權重 1"""
    if values is None:
        if system.channel_ids == MASER_CHANNELS:
            return cycle_current(system)
        return CountingVector.from_sequence(system, [1.0] * len(system.jumps))
    return CountingVector.from_sequence(system, values)


def collect_reports(bundle, counting, tau, delta_override=None, engine=None, params=None):
    """組合單點的全部 BoundReport；不適用的不等式以 inapplicable 標記"""
    reports = list(tkur_reports(bundle, counting, tau, delta_override))
    reports.extend(iur_report(bundle, counting, tau, s) for s in (0.0, 0.5))
    if bundle.full_rank and not counting.is_zero():
        reports.append(check_iur_variance(bundle, counting, tau, 0.5))

    reports.append(rkur_report(bundle, counting, tau))
    reports.append(check_kur_response(bundle, counting, tau))

    if engine is not None and params is not None:
        omega_h, omega_c = engine
        hot, cold = maser_heat_vectors(omega_h, omega_c)
        reports.append(check_power_efficiency(
            bundle, hot, cold, bath_temperature(omega_h, params.n_h),
            bath_temperature(omega_c, params.n_c), tau))
    return reports


def cmd_bounds(args, config=None):
    """Returns: (結束碼, JSON 文字)"""
    config = config or Config()
    system, params = _model_from_args(args)
    bundle = LiouvillianBundle(system, config)
    counting = _counting_from_args(system, args.counting)
    reports = collect_reports(bundle, counting, args.tau, args.corrupt_delta, args.engine, params)

    failed = [r.name for r in reports if r.certified and r.applicable and not r.satisfied]
    payload = {
        'tau': args.tau,
        'counting': {str(k): v for k, v in sorted(counting.weights.items())},
        'reports': [r.to_dict() for r in reports],
        'failed': failed,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + '\n'
    _emit(text, args.out)
    for name in failed:
        logger.error("❌ bound failed: %s", name)
    return (1 if failed else 0), text


def _z_score(estimate, exact, se):
    diff = estimate - exact
    if se == 0.0:
        return 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(exact)) else math.inf
    return diff / se


def cmd_traj(args, config=None, threads=1):
    """Returns: (結束碼, JSON 文字)"""
    config = config or Config()
    system, _ = _model_from_args(args)
    bundle = LiouvillianBundle(system, config)
    counting = _counting_from_args(system, args.counting)
    estimate = estimate_moments(system, counting, args.tau, args.trajectories, args.seed, config, threads)
    mean = mean_observable(bundle, counting, args.tau)
    variance = variance_exact(bundle, counting, args.tau)
    z_mean = _z_score(estimate.mean, mean, estimate.mean_se)
    z_var = _z_score(estimate.variance, variance, estimate.variance_se)

    payload = {
        'estimate': estimate.to_dict(),
        'exact': {'mean': mean, 'variance': variance},
        'z': {'mean': z_mean, 'variance': z_var},
    }
    if args.dump:
        path = args.dump_out or os.path.join(config.TRAJECTORY_DIR, f'traj_seed{args.seed}.csv')
        records = sample_records(system, counting, args.tau, args.dump, args.seed, config)
        write_trajectory_dump(path, records, {'seed': args.seed, 'tau': args.tau, 'n': args.dump})

    text = json.dumps(payload, indent=2, sort_keys=True) + '\n'
    _emit(text, args.out)
    ok = abs(z_mean) < config.TRAJ_Z_LIMIT and abs(z_var) < config.TRAJ_Z_LIMIT
    if not ok:
        logger.error("❌ 蒙地卡羅與精確值不符: z_mean=%.3g, z_var=%.3g", z_mean, z_var)
    return (0 if ok else 1), text


def verify_chain(chain, rng, tau, config):
    """單一古典鏈的恆等式檢查，傳回 (名稱, 是否成立, 數值) 列表"""
    system, channel_map = embed_classical(chain)
    bundle = LiouvillianBundle(system, config)
    checks = []

    current_weights = {}
    for (m, n), k in channel_map.items():
        if m < n:
            value = float(rng.uniform(-1.0, 1.0))
            current_weights[k] = value
            current_weights[channel_map[(n, m)]] = -value
    current = CountingVector(current_weights)
    generic = CountingVector.from_sequence(system, rng.uniform(-1.0, 1.0, len(system.jumps)))

    for mode in ('finite', 'asymptotic'):
        value = delta_phi(bundle, current, tau, mode)
        checks.append((f'delta_phi_{mode}', abs(value) < 1e-9, value))

    gradient = response_gradient(bundle, generic, tau)
    mean = mean_observable(bundle, generic, tau)
    mismatch = abs(gradient.total - mean) / max(abs(mean), 1e-300)
    checks.append(('gradient_sum', mismatch < 1e-6, mismatch))

    for report in (check_tur(bundle, current, tau), check_kur(bundle, current, tau)):
        checks.append((report.name, report.satisfied, report.slack if report.applicable else 0.0))

    edge_weights = {edge: generic.weights[k] for edge, k in channel_map.items()}
    reference = classical_reference(chain, edge_weights, tau)
    variance = variance_exact(bundle, generic, tau)
    mismatch = abs(variance - reference.variance) / max(abs(reference.variance), 1e-300)
    checks.append(('variance_reference', mismatch < 1e-8, mismatch))
    return checks


def cmd_verify_classical(args, config=None):
    """Returns: (結束碼, JSON 文字)"""
    config = config or Config()
    results = []
    for trial in range(args.trials):
        rng = np.random.default_rng([int(args.seed), trial])
        chain = random_chain(args.dim, rng)
        checks = verify_chain(chain, rng, args.tau, config)
        results.append({'trial': trial,
                        'checks': {name: {'ok': bool(ok), 'value': float(value)} for name, ok, value in checks}})

    failed = [f"{r['trial']}:{name}" for r in results for name, c in r['checks'].items() if not c['ok']]
    text = json.dumps({'seed': args.seed, 'trials': results, 'failed': failed}, indent=2, sort_keys=True) + '\n'
    _emit(text, args.out)
    for name in failed:
        logger.error("❌ 古典恆等式失敗: %s", name)
    return (1 if failed else 0), text


def _emit(text, path):
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        logger.info("💾 已寫入 %s", path)
    else:
        sys.stdout.write(text)


# ===== 參數解析 =====

def _add_model_arguments(parser):
    parser.add_argument('--config', help='JSON 模型檔 (format 1)，取代內建 maser')
    parser.add_argument('--gamma-h', type=float, default=Config.MASER_GAMMA_H)
    parser.add_argument('--gamma-c', type=float, default=Config.MASER_GAMMA_C)
    parser.add_argument('--n-h', type=float, default=Config.MASER_N_H)
    parser.add_argument('--n-c', type=float, default=Config.MASER_N_C)
    parser.add_argument('--omega', type=float, default=Config.MASER_OMEGA)
    parser.add_argument('--delta', type=float, default=Config.MASER_DELTA)
    parser.add_argument('--counting', type=parse_vector, help='依通道順序的權重，例如 1,-1,-1,1')
    parser.add_argument('--tau', type=float, default=Config.SWEEP_TAU)


def build_parser():
    parser = argparse.ArgumentParser(description="量子熱力學-動力學不確定性關係驗證工具")
    parser.add_argument('--verbose', action='store_true', help='輸出 DEBUG 日誌')
    parser.add_argument('--threads', type=int, help=f'執行緒數（覆寫 {Config.THREADS_ENV}）')
    sub = parser.add_subparsers(dest='command', required=True)

    sweep = sub.add_parser('sweep', help='參數掃描並輸出 CSV（內建 maser 或模型檔）')
    sweep.add_argument('--parameter', default=Config.SWEEP_PARAMETER,
                       help=f'maser 欄位，或搭配 --config 的 {RATE_PREFIX}<通道編號>')
    sweep.add_argument('--start', type=float, default=Config.SWEEP_START)
    sweep.add_argument('--stop', type=float, default=Config.SWEEP_STOP)
    sweep.add_argument('--points', type=int, default=Config.SWEEP_POINTS)
    sweep.add_argument('--tau', type=float, default=Config.SWEEP_TAU)
    sweep.add_argument('--counting', type=parse_vector, help='依通道順序的權重（預設 maser 循環電流）')
    sweep.add_argument('--bounds', type=parse_names, default=list(SWEEP_BOUNDS),
                       help=f"要計算的不等式，例如 {','.join(SWEEP_BOUNDS)}")
    sweep.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    sweep.add_argument('--response', type=int, nargs='?', const=Config.RESPONSE_SAMPLES, default=0,
                       help='每個格點的隨機計數向量數')
    sweep.add_argument('--response-out')
    sweep.add_argument('--out')
    sweep.add_argument('--config', help='JSON 模型檔 (format 1)，取代內建 maser')

    bounds = sub.add_parser('bounds', help='單點不等式報告 (JSON)')
    _add_model_arguments(bounds)
    bounds.add_argument('--engine', type=float, nargs=2, metavar=('OMEGA_H', 'OMEGA_C'),
                        help='附加功率-效率權衡檢查的能量量子')
    bounds.add_argument('--corrupt-delta', type=float, help=argparse.SUPPRESS)
    bounds.add_argument('--out')

    traj = sub.add_parser('traj', help='量子跳躍蒙地卡羅與精確值比較')
    _add_model_arguments(traj)
    traj.add_argument('-n', '--trajectories', type=int, default=10000)
    traj.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    traj.add_argument('--dump', type=int, default=0, help='另存前 N 條軌跡的跳躍事件 (time,channel)')
    traj.add_argument('--dump-out', help=f'軌跡檔路徑（預設 {Config.TRAJECTORY_DIR}/traj_seed<SEED>.csv）')
    traj.add_argument('--out')

    classical = sub.add_parser('verify-classical', help='隨機古典鏈的恆等式驗證')
    classical.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    classical.add_argument('--trials', type=int, default=20)
    classical.add_argument('--dim', type=int, default=4)
    classical.add_argument('--tau', type=float, default=100.0)
    classical.add_argument('--out')
    return parser


def setup_logging(verbose=False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv=None):
    """主程式；傳回結束碼 (0 成功、1 不等式或數值檢查失敗、2 模型或參數錯誤)"""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    config = Config()
    threads = args.threads if args.threads else config.worker_count()

    try:
        if args.command == 'sweep':
            spec = SweepSpec(parameter=args.parameter, start=args.start, stop=args.stop, points=args.points,
                             tau=args.tau, counting=args.counting, model=args.config,
                             bounds=args.bounds, seed=args.seed,
                             response_samples=args.response, output=args.out,
                             response_output=args.response_out)
            code, _, _ = cmd_sweep(spec, config, threads)
        elif args.command == 'bounds':
            code, _ = cmd_bounds(args, config)
        elif args.command == 'traj':
            code, _ = cmd_traj(args, config, threads)
        else:
            code, _ = cmd_verify_classical(args, config)
    except (QuantumModelError, StationaryStateError, ValueError, OSError) as e:
        logger.error("❌ %s", e)
        return 2
    except NumericalConsistencyError as e:
        logger.error("❌ 數值檢查失敗: %s", e)
        return 1
    return code
