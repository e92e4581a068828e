"""Frame-free kinematics of finite elastic and plastic deformation."""

__version__ = "0.1.0"
