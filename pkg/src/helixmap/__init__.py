"""helixmap: webometric link-analysis toolkit.

Harvest hyperlinks around a seed organisation, reduce URLs to actor-level
site keys, classify actors, and build the dichotomized directed
interlinking network with its degree / broker / category-matrix analyses.
"""

__version__ = "0.1.0"
