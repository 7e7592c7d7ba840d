"""Microgrid energy management with price-responsive demand, priority TCL
dispatch and battery storage, plus actor-critic and value-based learners."""

__version__ = "0.1.0"
