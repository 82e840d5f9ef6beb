#!/usr/bin/env python3
"""
量子不確定性關係驗證工具啟動器
子命令: sweep / bounds / traj / verify-classical
"""

import sys
from datetime import datetime

from modules.cli import main as cli_main


def print_banner():
    """顯示系統橫幅（輸出到 stderr，stdout 保留給 CSV/JSON）"""
    out = sys.stderr
    print("=" * 70, file=out)
    print("🎯 量子熱力學-動力學不確定性關係驗證工具", file=out)
    print("=" * 70, file=out)
    print("功能模組:", file=out)
    print("  ✅ GKSL 生成元、穩態與群逆", file=out)
    print("  ✅ 計數觀測量的平均與變異數", file=out)
    print("  ✅ TKUR / 逆不確定性 / 響應 KUR 驗證", file=out)
    print("  ✅ 量子跳躍蒙地卡羅", file=out)
    print("=" * 70, file=out)
    print(f"啟動時間: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}", file=out)
    print(file=out)


def main(argv=None):
    """主程式"""
    argv = list(sys.argv[1:] if argv is None else argv)
    show_banner = '--no-banner' not in argv
    argv = [a for a in argv if a != '--no-banner']

    if show_banner:
        print_banner()
    try:
        return cli_main(argv)
    except KeyboardInterrupt:
        print("\n⛔ 用戶中止", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
