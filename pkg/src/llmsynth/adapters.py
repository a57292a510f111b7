"""Running external checkers (model checkers, TLC, counterexample generators).

An :class:`ExternalChecker` writes the candidate and any side files into a
scratch directory, substitutes their paths into an argv template, runs the
executable with a timeout, and classifies the run by exit status and output
keywords.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .harness import Verdict, VerdictKind


class AdapterError(RuntimeError):
    """The external tool could not be run at all."""


@dataclass
class ExternalChecker:
    """Configured command line plus output classification.

    ``argv`` may contain ``{file}`` (the candidate) and ``{name}`` for any
    extra file passed to :meth:`run`.  A run is Pass when a pass pattern
    matches and no fail pattern does; a fail pattern match is SemanticFail;
    anything else (including a nonzero exit with no pattern) is SemanticFail
    when ``nonzero_is_fail`` and VerifyTimeout otherwise.
    """

    argv: list[str]
    pass_patterns: list[str] = field(default_factory=list)
    fail_patterns: list[str] = field(default_factory=list)
    cwd: str | None = None
    suffix: str = ".txt"
    nonzero_is_fail: bool = True

    @classmethod
    def from_command(cls, command: str, **kw) -> "ExternalChecker":
        return cls(shlex.split(command), **kw)

    def run(self, candidate: str, timeout: float, extra_files: dict[str, str] | None = None, *,
            filename: str | None = None, params: dict | None = None) -> Verdict:
        """Write the files, run the command, classify.

        ``filename`` overrides the candidate's file name; ``params`` fills
        further ``{placeholders}`` in argv.
        """
        with tempfile.TemporaryDirectory(prefix="llmsynth-") as tmp:
            paths = {"file": Path(tmp) / (filename or f"candidate{self.suffix}")}
            paths["file"].write_text(candidate)
            for name, content in (extra_files or {}).items():
                p = Path(tmp) / name
                p.write_text(content)
                paths[Path(name).stem] = p
            fmt = {k: str(v) for k, v in (params or {}).items()}
            fmt.update({k: str(v) for k, v in paths.items()})
            fmt["dir"] = tmp
            try:
                argv = [a.format(**fmt) for a in self.argv]
            except KeyError as exc:
                raise AdapterError(f"command template uses unknown placeholder {exc}") from None
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=max(timeout, 0.01),
                                      cwd=self.cwd or tmp)
            except subprocess.TimeoutExpired:
                return Verdict(VerdictKind.VERIFY_TIMEOUT, f"{argv[0]} did not finish within {timeout:.1f}s")
            except OSError as exc:
                raise AdapterError(f"cannot run {argv[0]}: {exc}") from exc
        return self.classify(proc.returncode, proc.stdout + proc.stderr)

    def classify(self, returncode: int, output: str) -> Verdict:
        for pat in self.fail_patterns:
            m = re.search(pat, output, re.M)
            if m:
                return Verdict(VerdictKind.SEMANTIC_FAIL, _excerpt(output, m.start()))
        if any(re.search(p, output, re.M) for p in self.pass_patterns):
            return Verdict(VerdictKind.PASS)
        if not self.pass_patterns and returncode == 0:
            return Verdict(VerdictKind.PASS)
        if returncode != 0 and self.nonzero_is_fail:
            return Verdict(VerdictKind.SEMANTIC_FAIL, f"exit status {returncode}: {_excerpt(output, 0)}")
        return Verdict(VerdictKind.VERIFY_TIMEOUT, f"no verdict in tool output: {_excerpt(output, 0)}")


def _excerpt(text: str, at: int, width: int = 400) -> str:
    return text[at:at + width].strip() or "(no output)"


NUXMV_PATTERNS = {
    "pass_patterns": [r"-- specification .* is true"],
    "fail_patterns": [r"-- specification .* is false"],
}
