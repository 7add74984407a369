"""quietskies: decentralized UAM corridor traffic simulation and multi-agent
reinforcement learning for noise-, separation-, and energy-aware altitude
policies."""

__version__ = "0.1.0"

from . import airspace, energy, env, metrics, nn, noise, ppo, sim  # noqa: F401
