"""Exception hierarchy shared by every module."""


class PlanewalkError(Exception):
    """Base class for all library errors."""


class InvalidAutomaton(PlanewalkError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid automaton: " + "; ".join(self.violations))


class NondeterministicUnquantified(InvalidAutomaton):
    def __init__(self, state_id):
        self.state_id = state_id
        super().__init__(
            [f"state {state_id!r} is nondeterministic but has no quantifier"]
        )


class AlphabetMismatch(PlanewalkError):
    pass


class ArenaTooLarge(PlanewalkError):
    pass


class NotExistential(PlanewalkError):
    pass


class NotUniversal(PlanewalkError):
    pass


class NotRecognisingMode(PlanewalkError):
    pass


class NotDominoSft(PlanewalkError):
    pass


class PatternTooLarge(PlanewalkError):
    pass


class TooManyStates(PlanewalkError):
    pass


class NoComplementFound(PlanewalkError):
    pass


class BoundTooLarge(PlanewalkError):
    pass


class FormatError(PlanewalkError):
    """Raised by the file parsers; the message names the offending field."""
