from ._smom import *  # noqa: F401,F403
