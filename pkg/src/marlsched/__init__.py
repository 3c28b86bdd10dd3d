"""Discrete-event scheduling simulator with a decentralized multi-agent
actor-critic scheduler, classical baselines, energy accounting and an
experiment harness."""

__version__ = "0.1.0"
