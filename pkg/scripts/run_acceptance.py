"""Print one PASS/FAIL line per acceptance criterion.

    python3 scripts/run_acceptance.py [criterion numbers ...]

The homogenization table (criterion 6) takes about ten minutes on one core.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from test_acceptance import CRITERIA  # noqa: E402


def main(argv):
    picks = [int(a) for a in argv] or range(1, len(CRITERIA) + 1)
    results = [CRITERIA[k - 1]() for k in picks]
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
