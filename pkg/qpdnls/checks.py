from typing import Iterable, List, NamedTuple

from qpdnls.utils import print

class LemmaCheck(NamedTuple):
    lemma: str
    instance: str
    expected: str
    actual: str
    passed: bool

    def line(self) -> str:
        if self.passed:
            return f"PASS lemma={self.lemma} instance={self.instance}"
        return f"FAIL lemma={self.lemma} instance={self.instance} expected={self.expected} actual={self.actual}"

    def as_row(self) -> dict:
        return {"lemma": self.lemma, "instance": self.instance, "expected": self.expected,
                "actual": self.actual, "pass": "true" if self.passed else "false"}

CHECK_FIELDS = ["lemma", "instance", "expected", "actual", "pass"]

def report(checks: Iterable[LemmaCheck], verbose: bool = True) -> List[LemmaCheck]:
    checks = list(checks)
    for check in checks:
        print(check.line(), is_print_rank=verbose or not check.passed)
    return checks

def all_passed(checks: Iterable[LemmaCheck]) -> bool:
    return all(check.passed for check in checks)
