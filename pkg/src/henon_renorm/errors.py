"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class HenonRenormError(Exception):
    code = "error"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details

    def as_dict(self):
        return {"code": self.code, "message": str(self), **_plain(self.details)}


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (int, float, str, bool)) or v is None:
            out[k] = v
        else:
            out[k] = repr(v)
    return out


def _make(name, code, base=HenonRenormError):
    return type(name, (base,), {"code": code})


DegenerateCurve = _make("DegenerateCurve", "degenerate_curve")
NotAGraph = _make("NotAGraph", "not_a_graph")
NoQuadraticCritical = _make("NoQuadraticCritical", "no_quadratic_critical")
OutOfDomain = _make("OutOfDomain", "out_of_domain")
NewtonDiverged = _make("NewtonDiverged", "newton_diverged")
EscapedDomain = _make("EscapedDomain", "escaped_domain")
NotUnimodal = _make("NotUnimodal", "not_unimodal")
SingularValueTie = _make("SingularValueTie", "singular_value_tie")
NoConvergence = _make("NoConvergence", "no_convergence")
NotADiffeomorphism = _make("NotADiffeomorphism", "not_a_diffeomorphism")
BisectionFailed = _make("BisectionFailed", "bisection_failed")
NoPeriodicDomain = _make("NoPeriodicDomain", "no_periodic_domain")
FoliationIntegrationFailed = _make("FoliationIntegrationFailed", "foliation_integration_failed")
ShapeTestFailed = _make("ShapeTestFailed", "shape_test_failed")
CocycleOverflow = _make("CocycleOverflow", "cocycle_overflow")
NoFit = _make("NoFit", "no_fit")
InsufficientLength = _make("InsufficientLength", "insufficient_length")
NoTangency = _make("NoTangency", "no_tangency")
NormalFormResidualTooLarge = _make("NormalFormResidualTooLarge", "normal_form_residual_too_large")
NotMonotone = _make("NotMonotone", "not_monotone")
NegativeCurvature = _make("NegativeCurvature", "negative_curvature")
NotSingleCritical = _make("NotSingleCritical", "not_single_critical")
EmptyIntersection = _make("EmptyIntersection", "empty_intersection")
NotInjectiveOnCurve = _make("NotInjectiveOnCurve", "not_injective_on_curve")
DegenerateConfiguration = _make("DegenerateConfiguration", "degenerate_configuration")
NotDiffeomorphic = _make("NotDiffeomorphic", "not_diffeomorphic")
HypothesisFailed = _make("HypothesisFailed", "hypothesis_failed")
OverlapDetected = _make("OverlapDetected", "overlap_detected")
KoebeBoundExceeded = _make("KoebeBoundExceeded", "koebe_bound_exceeded")
StructureViolation = _make("StructureViolation", "structure_violation")


class NotCauchy(UserWarning):
    """Critical-value gaps across depths failed to decrease."""
