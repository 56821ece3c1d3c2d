"""slfkit: factored surface light field reconstruction from RGBD+IR sequences.

The package estimates a view-independent diffuse texture atlas plus a
per-segment glossy reflectance model from a simulated sensor sweep, and
renders the result under arbitrary environment lighting.
"""

__version__ = "0.1.0"
