"""Fashion retrieval + captioning at desk scale.

A three-mode decoder architecture (align/caption, relative caption, fuse)
trained with two contrastive and two language-modeling objectives over
image-text pairs and weakly-supervised pseudo-triplets, on top of a small
reverse-mode autodiff engine. See README.md for the pipeline entry points.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as kernel_backend  # noqa: F401
