from __future__ import annotations


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, *, line: int, col: int) -> None:
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UndeclaredVariableError(FormulaSyntaxError):
    pass


class DuplicateDeclarationError(FormulaSyntaxError):
    pass


class UnsupportedFragmentError(ValueError):
    """The formula lies outside the fragments the pipeline can decide."""

    def __init__(self, restriction: str, node: object | None = None) -> None:
        where = f" at {node}" if node is not None else ""
        super().__init__(f"unsupported fragment: {restriction}{where}")
        self.restriction = restriction
        self.node = node


class VassFormatError(ValueError):
    pass


class MachineFormatError(ValueError):
    pass


class ContractViolation(RuntimeError):
    pass
