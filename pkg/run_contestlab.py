# run_contestlab.py
import sys

if __name__ == "__main__":
    # 子命令与参数原样转交给 src/cli/contest_cli.py 中的 dispatch
    try:
        from src.cli.contest_cli import dispatch
        from src.utils.config import validate_configuration
    except ImportError as e:
        print(f"\n错误: 无法导入 contestlab 模块: {e}")
        print("运行命令: pip install -r requirements.txt")
        sys.exit(1)

    is_valid, errors = validate_configuration()
    for error in errors:
        print(f"配置警告: {error}", file=sys.stderr)

    sys.exit(dispatch(sys.argv[1:]))
