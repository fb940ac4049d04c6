"""Sparse diffusion-source localization on graphs."""

from ._srcloc import *  # noqa: F401,F403
from ._srcloc import Error

__all__ = [name for name in dir() if not name.startswith("_")]
