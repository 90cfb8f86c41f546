"""Model-predictive control of a single-zone indoor microclimate."""
