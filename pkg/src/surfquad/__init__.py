"""Surface-based geometric control of a quadrotor on SE(3), with a fixed-step simulator."""

__version__ = "0.1.0"
