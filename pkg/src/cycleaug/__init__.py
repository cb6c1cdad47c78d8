"""Unpaired class-to-class image translation for classifier augmentation.

A small numpy stack: a tensor engine with reverse-mode autodiff, the
cycle-consistent two-pair GAN built on it, a synthetic lesion dataset, a
downstream CNN classifier, and the fooling/augmentation evaluation harness.
Convolution kernels run through numba when available (see
``cycleaug.backend``).
"""

__version__ = "0.1.0"

from .backend import active_backend, set_backend

__all__ = ["active_backend", "set_backend", "__version__"]
