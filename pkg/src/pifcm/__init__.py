"""Fuzzy clustering segmentation of noisy 3-D volumes (FCM, IFCM, 3DPIFCM)."""

__version__ = "0.1.0"
