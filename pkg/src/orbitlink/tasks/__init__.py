"""Experiment generators and protocols built on the core modules."""
