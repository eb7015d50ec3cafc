"""First-order correlated equilibria of smooth games: dynamics, regret audits and certificates."""
from . import certify, deviations, dynamics, games, geometry, phi_regret, regret

__all__ = ["certify", "deviations", "dynamics", "games", "geometry", "phi_regret", "regret"]
__version__ = "0.1.0"
