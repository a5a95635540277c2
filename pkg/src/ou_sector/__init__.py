"""ou-sector: numerical checks for sectoriality of weighted nonsymmetric Ornstein-Uhlenbeck operators."""

__version__ = "0.1.0"
