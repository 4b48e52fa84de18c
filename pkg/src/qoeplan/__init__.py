"""Training-budget planner driven by forecast learning curves and a QoE utility."""

__version__ = "0.1.0"
