"""Sphere graphs and free splittings of free groups, with exact rank-2
Farey models, intersection growth detectors, submanifold projections and
projection-complex verification suites."""

__version__ = "0.1.0"
