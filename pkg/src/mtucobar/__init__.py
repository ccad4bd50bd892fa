"""Adams-Novikov E2 pages and obstruction criteria for complex sections up to cobordism."""

__version__ = "0.1.0"
