from dlaas.api.archive import build_result_archive
from dlaas.api.logstream import (
    DEFAULT_REGISTRY,
    LogBroker,
    LogParserRegistry,
    MetricRecord,
    StreamParser,
    metric_parser,
    parse_log_stream,
)
from dlaas.api.server import create_app

__all__ = [
    "DEFAULT_REGISTRY",
    "LogBroker",
    "LogParserRegistry",
    "MetricRecord",
    "StreamParser",
    "build_result_archive",
    "create_app",
    "metric_parser",
    "parse_log_stream",
]
