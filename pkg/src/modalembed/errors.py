"""Exception hierarchy.  CLI exit codes are keyed off these classes."""


class ModalEmbedError(Exception):
    pass


# syntax_core
class TypeCheckError(ModalEmbedError):
    pass


class ArityConflict(TypeCheckError):
    pass


class SortConflict(TypeCheckError):
    pass


# parser
class ParseError(ModalEmbedError):
    """Carries one or more error diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# logic_spec
class LogicSpecError(ModalEmbedError):
    pass


class UnsupportedLogicFamily(LogicSpecError):
    pass


class MalformedProperty(LogicSpecError):
    pass


class UnknownSystem(LogicSpecError):
    pass


# embedding / printing
class UnsupportedFeature(ModalEmbedError):
    pass


class UnhandledConnective(UnsupportedFeature):
    pass


class MissingConjecture(ModalEmbedError):
    pass


class StageMismatch(ModalEmbedError):
    pass


# oracle
class BoundsTooLarge(ModalEmbedError):
    pass


class UnassignedSymbol(ModalEmbedError):
    pass


class OutsideFragment(ModalEmbedError):
    """The problem uses symbols or types the bounded oracle cannot enumerate."""
