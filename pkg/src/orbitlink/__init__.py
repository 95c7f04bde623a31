"""orbitlink: probe interventions on sequential graph processes, orbit
symmetries, and embedding models for counterfactual link queries."""

__version__ = "0.1.0"
