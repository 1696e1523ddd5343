"""Secrecy-capacity optimisation for IRS-assisted visible light downlinks.

The IRS reflections arrive later than the direct light, so each reflected
path interferes constructively or destructively depending on frequency.
Allocating IRS elements between the legitimate user and the eavesdropper
shapes that interference to maximise the secrecy capacity.
"""

__version__ = "0.1.0"
