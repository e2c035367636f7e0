from ._longric import *  # noqa: F401,F403
