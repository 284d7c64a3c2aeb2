"""promex: extract verifiable process-calculus models from stack-machine
protocol implementations by symbolic execution."""

__version__ = "0.1.0"
