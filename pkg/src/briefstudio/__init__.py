"""Brief-to-design orchestration service.

Turns a free-text design brief into final design images through three steps:
requirement structuring, element-level exploration with previews, and
composition-first integration. Providers are pluggable; deterministic mocks
enable fully offline runs.
"""

__version__ = "0.1.0"
