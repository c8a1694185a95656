#!/usr/bin/env python3
"""Build the smm_py extension, import it, and cross-check a few values.

Usage: python3 python/smoke_test.py [--debug]

Builds the cdylib with cargo, copies it into a temporary directory under
the importable name, and exercises every exported function once.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build(profile: str) -> Path:
    cmd = ["cargo", "build", "-p", "smm-py"]
    if profile == "release":
        cmd.append("--release")
    subprocess.run(cmd, cwd=REPO, check=True)
    lib = REPO / "target" / profile / "libsmm_py.so"
    if not lib.exists():  # macOS fallback
        lib = REPO / "target" / profile / "libsmm_py.dylib"
    if not lib.exists():
        sys.exit(f"built library not found under target/{profile}")
    return lib


def main() -> None:
    profile = "debug" if "--debug" in sys.argv[1:] else "release"
    lib = build(profile)
    tmp = tempfile.mkdtemp(prefix="smm_py_smoke_")
    shutil.copy2(lib, Path(tmp) / "smm_py.so")
    sys.path.insert(0, tmp)
    import smm_py

    # Parsing round-trips and rejects, with offsets in the message.
    canonical = smm_py.parse_check("exp(2*x) / (1 + y^2)")
    assert "exp" in canonical, canonical
    try:
        smm_py.parse_check("x +")
    except ValueError as e:
        assert "offset 3" in str(e), e
    else:
        sys.exit("parse_check accepted a malformed expression")

    # Jet evaluation agrees with plain math and with the exponential
    # homomorphism exp(x)*exp(y) = exp(x+y).
    assert abs(smm_py.eval_expr("exp(2*x)", 0.25, 0.0) - math.exp(0.5)) < 1e-12
    for i in range(3):
        for k in range(3):
            lhs = smm_py.eval_partial("exp(x)*exp(y)", 0.3, -0.7, i, k)
            rhs = smm_py.eval_partial("exp(x+y)", 0.3, -0.7, i, k)
            assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs)), (i, k, lhs, rhs)

    # Taylor coefficients of exp(x) at 0: 1/i! down the first column.
    jet = smm_py.jet_coefficients("exp(x)", 0.0, 0.0, 4, 0)
    for i, row in enumerate(jet):
        assert abs(row[0] - 1.0 / math.factorial(i)) < 1e-12, (i, row)

    # Closed-form solitons parse back and evaluate finitely.
    m_text = smm_py.akns_soliton_expr(0.5, [(1.0, 0.0)])
    assert abs(smm_py.eval_expr(m_text, 0.0, 0.0)) < 10.0
    m2, n2 = smm_py.nlbq_soliton_expr(1.0, [(2.0, 0.0), (3.0, 0.0)])
    assert "exp" in m2 and "exp" in n2

    # The verification machinery is reachable from Python.
    names = smm_py.builtin_scenarios()
    assert "akns-one-soliton" in names and "all" in names
    passed, report = smm_py.run_builtin("akns-one-soliton")
    assert passed, report
    assert "[[entry]]" in report and "pass = true" in report

    print("smoke test passed:", len(names), "builtin scenarios exposed")


if __name__ == "__main__":
    main()
