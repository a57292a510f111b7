"""Exceptions shared by the reactive-domain checkers."""


class ReactiveError(ValueError):
    pass


class SyntaxFail(ReactiveError):
    """Candidate text is malformed or breaks the structural contract."""


class GrammarFail(ReactiveError):
    """Candidate interface does not match the specification's signals."""


class SemanticFail(ReactiveError):
    pass


class StateLimitExceeded(RuntimeError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"explored more than {cap} states")
