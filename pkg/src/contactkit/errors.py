"""Exception hierarchy.

The CLI maps these onto exit codes: input errors exit 2, precondition
violations exit 3, failed verifications exit 1.
"""


class ContactKitError(Exception):
    exit_code = 2


class InputError(ContactKitError):
    """Malformed user input (expression text, word text, chart spec)."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        super().__init__(message)

    def annotated(self):
        """Message with a caret under the offending column."""
        caret = " " * self.position + "^"
        return f"{self.args[0]} at position {self.position}\n  {self.text}\n  {caret}"

    def __str__(self):
        return f"{self.args[0]} (position {self.position})"


class UnknownVariableError(ParseError):
    pass


class DomainError(ContactKitError):
    """Evaluation outside the chart domain, on a singular locus, or at a pole."""

    exit_code = 2


class ChartMismatchError(ContactKitError):
    exit_code = 2


class DegreeError(ContactKitError):
    exit_code = 2


class PreconditionError(ContactKitError):
    exit_code = 3


class VerificationError(ContactKitError):
    exit_code = 1
