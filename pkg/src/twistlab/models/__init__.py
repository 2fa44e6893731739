"""Concrete models: twist annulus, Katok sphere, convex billiards, polynomial collar."""
from .annulus import AnnulusTwistModel, annulus_model, annulus_profile
from .billiard import CircleTable, EllipseTable, FourierTable, billiard_form_check, billiard_map, make_table
from .collar import polynomial_collar_model
from .katok import KatokPageMap, KatokSystem, binding_points, katok_fixed_point_scan, katok_twist_function, p0, q0

__all__ = [
    "AnnulusTwistModel", "annulus_model", "annulus_profile",
    "CircleTable", "EllipseTable", "FourierTable", "billiard_form_check", "billiard_map", "make_table",
    "polynomial_collar_model",
    "KatokPageMap", "KatokSystem", "binding_points", "katok_fixed_point_scan", "katok_twist_function", "p0", "q0",
]
