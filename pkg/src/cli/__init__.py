from cli.commands import COMMANDS, CommandResult, execute, run
from cli.config_document import ConfigDocument, parse_config
from cli.expressions import ExpressionParser, format_expression, parse_expression

__all__ = [
    "COMMANDS", "CommandResult", "execute", "run",
    "ConfigDocument", "parse_config",
    "ExpressionParser", "format_expression", "parse_expression",
]
