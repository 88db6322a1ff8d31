"""Link-level simulator and iterative receiver for unsynchronized
short-packet single-carrier transmission."""

__version__ = "0.1.0"
