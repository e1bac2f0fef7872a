# logger_config.py
import logging
import json
import os
import sys

# 定义日志目录和文件
LOG_DIR = os.getenv("CONTESTLAB_LOG_DIR", "logs")
LOG_FILE = os.path.join(LOG_DIR, "contestlab.log")
CONSOLE_LEVEL = os.getenv("CONTESTLAB_LOG_LEVEL", "INFO").upper()

def setup_logger():
    """设置统一的日志器"""
    logger = logging.getLogger("ContestLabLogger")
    logger.setLevel(logging.DEBUG)
    # 不向 root logger 传播，避免与调用方的日志配置重复输出
    logger.propagate = False

    # 防止重复添加处理器
    if logger.handlers:
        return logger

    # 文件处理器 (记录到文件)
    try:
        os.makedirs(LOG_DIR, exist_ok=True)
        fh = logging.FileHandler(LOG_FILE, encoding='utf-8')
        fh.setLevel(logging.DEBUG)
    except OSError as e:
        print(f"警告: 无法打开日志文件 {LOG_FILE}: {e}", file=sys.stderr)
        fh = None

    # 控制台处理器 (输出到 stderr，stdout 留给 JSON/CSV 产物)
    ch = logging.StreamHandler()
    ch.setLevel(getattr(logging, CONSOLE_LEVEL, logging.INFO))

    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    if fh:
        fh.setFormatter(formatter)
        logger.addHandler(fh)

    ch.setFormatter(formatter)
    logger.addHandler(ch)

    return logger

# 获取配置好的日志器实例
logger = setup_logger()

def log_event(event_type: str, details: dict):
    """记录结构化事件日志（以JSON字符串形式记录）"""
    log_entry = {
        "event_type": event_type,
        "details": details
    }
    logger.info(json.dumps(log_entry, ensure_ascii=False, default=str))

def log_error(error_message: str, context: dict = None):
    """记录错误日志"""
    details = {"message": error_message}
    if context:
        details["context"] = context

    log_event("ERROR", details)
    # 同时使用logger.error级别记录，方便控制台查看
    logger.error(f"Error occurred: {error_message}. Context: {context}")
