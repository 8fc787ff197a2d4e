"""Planar maps, their critical curves and preimage counts."""

from .critical import CriticalCurve, Tag, classify_critical_point, count_cusps, trace_critical_set
from .maps import PlanarMap, ZZbarMap, get_preset, map_from_dict, paper_map, zzbar_map

__all__ = [
    "CriticalCurve",
    "PlanarMap",
    "Tag",
    "ZZbarMap",
    "classify_critical_point",
    "count_cusps",
    "get_preset",
    "map_from_dict",
    "paper_map",
    "trace_critical_set",
    "zzbar_map",
]
