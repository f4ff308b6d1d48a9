"""Rule-constrained deterministic actor-critic agents for room temperature control."""

__version__ = "0.1.0"
