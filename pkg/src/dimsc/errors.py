"""Exception hierarchy.

Everything raised on purpose derives from :class:`DiMSCError` so callers
(the CLI in particular) can separate data/model failures from bugs.
"""


class DiMSCError(Exception):
    """Base class. ``stage`` is filled in by the estimator pipeline."""

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class DimensionError(DiMSCError, ValueError):
    pass


class RankDeficiencyError(DiMSCError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class ProbabilityOverflowError(DiMSCError):
    def __init__(self, msg, position=None):
        super().__init__(msg)
        self.position = position


class DomainError(DiMSCError, ValueError):
    pass


class DegenerateNetworkError(DiMSCError):
    pass


class CornerDeficiencyError(DiMSCError):
    def __init__(self, msg, picks=()):
        super().__init__(msg)
        self.picks = list(picks)


class DegenerateConeError(DiMSCError):
    pass


class ConeConditionError(DiMSCError):
    def __init__(self, msg, negative=()):
        super().__init__(msg)
        self.negative = list(negative)


class InsufficientPointsError(DiMSCError):
    pass


class ConeHuntingError(DiMSCError):
    def __init__(self, msg, margins=None):
        super().__init__(msg)
        self.margins = margins


class IllConditionedCornersError(DiMSCError):
    def __init__(self, msg, cond=None):
        super().__init__(msg)
        self.cond = cond


class ConfigError(DiMSCError, ValueError):
    pass


class ParseError(DiMSCError, ValueError):
    def __init__(self, msg, line=None):
        super().__init__(msg)
        self.line = line
