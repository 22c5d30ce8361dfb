"""Desk-scale lab for decoupled three-agent PPO with a force-adaptive torso-tilt reward."""

__version__ = "0.1.0"
