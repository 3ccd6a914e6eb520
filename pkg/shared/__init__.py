"""
Shared package initialization.
"""

__version__ = "1.0.0"
__author__ = "Josephson Interferometer Simulation Team"
__description__ = "Steady states and photon statistics of a driven three-cavity circuit QED interferometer"
