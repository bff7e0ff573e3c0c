"""Unsupervised weld defect detection from welding audio and video.

Two per-modality autoencoders are trained on good welds only; anomaly
scores are the reconstruction errors, standardized and fused by a convex
combination whose weight is chosen on the validation split.
"""

__version__ = "0.1.0"
