from dlaas.cli.main import main

__all__ = ["main"]
